#include "slidemil/cli.hpp"

int main(int argc, char** argv) { return slidemil::cli_main(argc, argv); }
