#include "slidemil/splits.hpp"

#include <algorithm>
#include <map>

#include "slidemil/errors.hpp"
#include "slidemil/rng.hpp"

namespace slidemil {

std::vector<FoldSplit> stratified_case_kfold(const std::vector<SlideRecord>& records, int k,
                                             std::uint64_t seed) {
    if (k < 2) {
        throw config_error("k-fold needs k >= 2");
    }
    // Unique cases per class, in first-appearance order for determinism.
    std::map<std::string, SubtypeLabel> case_label;
    std::vector<std::vector<std::string>> class_cases(kNumSubtypes);
    for (const auto& rec : records) {
        if (case_label.emplace(rec.case_id, rec.label).second) {
            class_cases[static_cast<std::size_t>(subtype_code(rec.label))].push_back(rec.case_id);
        }
    }
    for (int c = 0; c < kNumSubtypes; ++c) {
        if (class_cases[static_cast<std::size_t>(c)].size() < static_cast<std::size_t>(k)) {
            throw degenerate_error(std::string("stratification impossible: class ") +
                                   kSubtypeNames[c] + " has " +
                                   std::to_string(class_cases[static_cast<std::size_t>(c)].size()) +
                                   " cases, need at least " + std::to_string(k));
        }
    }

    // Shuffle within each class, then deal round-robin into k groups.
    Rng rng(seed);
    std::vector<std::set<std::string>> groups(static_cast<std::size_t>(k));
    for (int c = 0; c < kNumSubtypes; ++c) {
        auto& cases = class_cases[static_cast<std::size_t>(c)];
        rng.shuffle(cases);
        for (std::size_t i = 0; i < cases.size(); ++i) {
            groups[i % static_cast<std::size_t>(k)].insert(cases[i]);
        }
    }

    std::vector<FoldSplit> folds(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        FoldSplit& fold = folds[static_cast<std::size_t>(i)];
        fold.fold_index = i;
        fold.test_cases = groups[static_cast<std::size_t>(i)];
        fold.val_cases = groups[static_cast<std::size_t>((i + 1) % k)];
        for (int g = 0; g < k; ++g) {
            if (g == i || g == (i + 1) % k) continue;
            fold.train_cases.insert(groups[static_cast<std::size_t>(g)].begin(),
                                    groups[static_cast<std::size_t>(g)].end());
        }
    }
    return folds;
}

std::vector<SlideRecord> slides_for_cases(const std::vector<SlideRecord>& records,
                                          const std::set<std::string>& cases) {
    std::vector<SlideRecord> out;
    for (const auto& rec : records) {
        if (cases.count(rec.case_id)) out.push_back(rec);
    }
    return out;
}

}  // namespace slidemil
