#pragma once

#include <array>
#include <string>

#include "slidemil/errors.hpp"

namespace slidemil {

// The five epithelial ovarian carcinoma subtypes, codes 0..4.
enum class SubtypeLabel : int {
    HGSC = 0,  // high-grade serous
    LGSC = 1,  // low-grade serous
    CCC = 2,   // clear cell
    EC = 3,    // endometrioid
    MC = 4,    // mucinous
};

inline constexpr int kNumSubtypes = 5;

inline constexpr std::array<const char*, kNumSubtypes> kSubtypeNames = {"HGSC", "LGSC", "CCC",
                                                                        "EC", "MC"};

inline const char* subtype_name(SubtypeLabel label) {
    return kSubtypeNames[static_cast<int>(label)];
}

inline int subtype_code(SubtypeLabel label) { return static_cast<int>(label); }

inline SubtypeLabel subtype_from_code(int code) {
    if (code < 0 || code >= kNumSubtypes) {
        throw validation_error("subtype code out of range: " + std::to_string(code));
    }
    return static_cast<SubtypeLabel>(code);
}

inline SubtypeLabel subtype_from_name(const std::string& name) {
    for (int i = 0; i < kNumSubtypes; ++i) {
        if (name == kSubtypeNames[i]) return static_cast<SubtypeLabel>(i);
    }
    throw validation_error("unknown subtype label: '" + name + "'");
}

}  // namespace slidemil
