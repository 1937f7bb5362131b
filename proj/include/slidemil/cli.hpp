#pragma once

namespace slidemil {

// Entry point behind the slidemil executable; exposed so the exit-code and
// file contracts are testable in-process.
// Exit codes: 0 success, 1 runtime failure, 2 I/O failure, 64 usage/config.
int cli_main(int argc, const char* const* argv);

}  // namespace slidemil
