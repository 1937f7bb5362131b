#pragma once

// Deterministic generators shared by the unit and acceptance suites.

#include <string>
#include <vector>

#include "slidemil/abmil.hpp"
#include "slidemil/feature_bag.hpp"
#include "slidemil/image.hpp"
#include "slidemil/manifest.hpp"
#include "slidemil/predictions.hpp"
#include "slidemil/rng.hpp"

namespace synthetic {

inline slidemil::RgbTile random_tile(int w, int h, std::uint64_t seed, int lo = 0, int hi = 255) {
    slidemil::RgbTile tile(w, h);
    slidemil::Rng rng(seed);
    for (auto& v : tile.pixels) {
        v = static_cast<std::uint8_t>(lo + rng.uniform_int(static_cast<std::uint64_t>(hi - lo + 1)));
    }
    return tile;
}

inline slidemil::FeatureBag random_bag(int n, int dim, std::uint64_t seed,
                                       std::uint32_t patch_px = 256) {
    slidemil::FeatureBag bag;
    bag.slide_id = "bag" + std::to_string(seed);
    bag.patch_size_px = patch_px;
    bag.features.resize(n, dim);
    slidemil::Rng rng(seed);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < dim; ++j) {
            bag.features(i, j) = static_cast<float>(rng.gaussian());
        }
        bag.coords.push_back({static_cast<std::uint32_t>(rng.uniform_int(1 << 16)),
                              static_cast<std::uint32_t>(rng.uniform_int(1 << 16))});
    }
    return bag;
}

// Bags with a planted class signal: a fraction of patches carries
// signal_scale * e_label plus unit Gaussian noise, the rest pure noise.
struct MilTask {
    std::vector<slidemil::FeatureBag> bags;
    std::vector<slidemil::SubtypeLabel> labels;
    std::vector<std::vector<bool>> signal_mask;  // per bag, per patch
};

inline MilTask make_mil_task(int n_bags, int dim, int min_patches, int max_patches,
                             double signal_fraction, double signal_scale, std::uint64_t seed) {
    MilTask task;
    slidemil::Rng rng(seed);
    for (int b = 0; b < n_bags; ++b) {
        const int label = b % slidemil::kNumSubtypes;
        const int n = min_patches +
                      static_cast<int>(rng.uniform_int(
                          static_cast<std::uint64_t>(max_patches - min_patches + 1)));
        const int n_signal = std::max(1, static_cast<int>(std::lround(signal_fraction * n)));

        slidemil::FeatureBag bag;
        bag.slide_id = "synth" + std::to_string(b);
        bag.patch_size_px = 256;
        bag.features.resize(n, dim);
        std::vector<bool> mask(static_cast<std::size_t>(n), false);
        const auto signal_idx =
            rng.sample_without_replacement(static_cast<std::size_t>(n),
                                           static_cast<std::size_t>(n_signal));
        for (auto i : signal_idx) mask[i] = true;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < dim; ++j) {
                double v = rng.gaussian();
                if (mask[static_cast<std::size_t>(i)] && j == label) v += signal_scale;
                bag.features(i, j) = static_cast<float>(v);
            }
            bag.coords.push_back({static_cast<std::uint32_t>(i) * 256, 0});
        }
        task.bags.push_back(std::move(bag));
        task.labels.push_back(static_cast<slidemil::SubtypeLabel>(label));
        task.signal_mask.push_back(std::move(mask));
    }
    return task;
}

inline std::vector<slidemil::BagRef> refs_of(const MilTask& task) {
    std::vector<slidemil::BagRef> refs;
    for (std::size_t i = 0; i < task.bags.size(); ++i) {
        refs.push_back({&task.bags[i], task.labels[i]});
    }
    return refs;
}

// Random prediction sets whose truths cover every class.
inline slidemil::PredictionSet random_predictions(int n, std::uint64_t seed,
                                                  int n_classes = slidemil::kNumSubtypes) {
    slidemil::PredictionSet preds;
    preds.n_classes = n_classes;
    slidemil::Rng rng(seed);
    for (int i = 0; i < n; ++i) {
        const int truth = i < n_classes ? i : static_cast<int>(rng.uniform_int(
                                                  static_cast<std::uint64_t>(n_classes)));
        std::vector<double> probs(static_cast<std::size_t>(n_classes));
        double total = 0.0;
        for (auto& p : probs) {
            p = rng.uniform() + 1e-3;
            total += p;
        }
        for (auto& p : probs) p /= total;
        preds.items.push_back(
            slidemil::make_prediction("s" + std::to_string(i), truth, std::move(probs)));
    }
    return preds;
}

// Manifest rows with the training-set class proportions used throughout the
// tests: slides per class {1266, 92, 198, 209, 99} over cases
// {308, 21, 45, 38, 22}.
inline std::vector<slidemil::SlideRecord> table1_manifest() {
    const long slides_per_class[5] = {1266, 92, 198, 209, 99};
    const long cases_per_class[5] = {308, 21, 45, 38, 22};
    std::vector<slidemil::SlideRecord> records;
    for (int c = 0; c < 5; ++c) {
        long slide_idx = 0;
        for (long s = 0; s < slides_per_class[c]; ++s) {
            slidemil::SlideRecord rec;
            rec.slide_id = "c" + std::to_string(c) + "_s" + std::to_string(slide_idx++);
            // Deal slides onto this class's cases round-robin.
            rec.case_id = "c" + std::to_string(c) + "_case" +
                          std::to_string(s % cases_per_class[c]);
            rec.label = static_cast<slidemil::SubtypeLabel>(c);
            rec.feature_path = "unused.fbag";
            rec.cohort_tag = "train";
            records.push_back(std::move(rec));
        }
    }
    return records;
}

}  // namespace synthetic
