#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "slidemil/manifest.hpp"

namespace slidemil {

struct FoldSplit {
    int fold_index = 0;
    std::set<std::string> train_cases;
    std::set<std::string> val_cases;
    std::set<std::string> test_cases;
};

// Case-level stratified k-fold: cases are shuffled deterministically by
// seed, dealt into k class-stratified groups; fold i tests on group i,
// validates on group (i+1) mod k and trains on the rest, so slides of one
// case never straddle splits.
std::vector<FoldSplit> stratified_case_kfold(const std::vector<SlideRecord>& records, int k,
                                             std::uint64_t seed);

// All records whose case id belongs to the given set, in manifest order.
std::vector<SlideRecord> slides_for_cases(const std::vector<SlideRecord>& records,
                                          const std::set<std::string>& cases);

}  // namespace slidemil
