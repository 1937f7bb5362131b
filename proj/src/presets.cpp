#include "slidemil/presets.hpp"

#include <map>

#include "slidemil/errors.hpp"

namespace slidemil {

namespace {

struct PresetRow {
    const char* name;
    double lr;
    int patience;
    double factor;
    double beta1;
    double beta2;
    double epsilon;
    double dropout;
    double weight_decay;
    int max_patches;
    int m1;
    int m2;
};

// Final tuned hyperparameters per feature extractor (and per preprocessing
// variant of the ResNet50 baseline).
constexpr PresetRow kPresets[] = {
    {"rn50", 2e-3, 20, 0.75, 0.75, 0.95, 1e-2, 0.4, 1e-3, 800, 512, 128},
    {"rn18", 1e-4, 20, 0.9, 0.8, 0.99, 1e-4, 0.5, 1e-5, 700, 1024, 256},
    {"vit-l", 5e-5, 10, 0.35, 0.85, 0.999, 1e-3, 0.0, 1e-1, 800, 512, 384},
    {"rn18-histo", 2e-4, 20, 0.9, 0.9, 0.99, 1e-4, 0.6, 1e-4, 1000, 512, 512},
    {"lunit", 1e-4, 10, 0.75, 0.99, 0.9999, 1e-5, 0.6, 1e-1, 900, 1024, 512},
    {"rn50-histo", 2e-4, 25, 0.75, 0.8, 0.99, 1e-4, 0.6, 1e-3, 700, 512, 384},
    {"ctranspath", 1e-4, 25, 0.9, 0.7, 0.99999, 1e-3, 0.4, 1e-3, 1000, 256, 128},
    {"hibou-b", 4e-5, 10, 0.9, 0.99, 0.9999, 1e-3, 0.3, 1e-2, 1600, 256, 128},
    {"phikon", 5e-5, 25, 0.75, 0.99, 0.999, 1e-5, 0.8, 1e-5, 1200, 512, 256},
    {"kaiko-b8", 2e-5, 10, 0.75, 0.95, 0.9999, 1e-5, 0.2, 1e-1, 600, 512, 128},
    {"gpfm", 1e-4, 25, 0.9, 0.95, 0.99, 1e-4, 0.8, 1e-6, 1000, 512, 128},
    {"uni", 1e-5, 10, 0.75, 0.9, 0.999, 1e-5, 0.0, 1e-3, 1000, 512, 256},
    {"hibou-l", 5e-5, 25, 0.75, 0.75, 0.99999, 1e-4, 0.6, 1e-7, 400, 256, 128},
    {"virchow", 2e-4, 20, 0.9, 0.95, 0.99, 1e-3, 0.8, 1e-2, 1100, 512, 256},
    {"virchow2-cls", 2e-5, 10, 0.75, 0.55, 0.999, 1e-4, 0.6, 1e-4, 1000, 512, 256},
    {"h-optimus-0", 2.5e-5, 5, 0.75, 0.5, 0.9999, 1e-4, 0.4, 1e-2, 1000, 128, 32},
    {"prov-gigapath", 5e-5, 15, 0.75, 0.7, 0.99, 1e-4, 0.7, 1e-4, 1300, 512, 256},
    {"rn50-reinhard", 2e-3, 25, 0.75, 0.75, 0.95, 1e-2, 0.4, 1e-3, 400, 512, 256},
    {"rn50-macenko", 2e-3, 15, 0.75, 0.85, 0.95, 1e-2, 0.3, 1e-3, 400, 512, 128},
    {"rn50-otsu", 2e-3, 15, 0.9, 0.75, 0.95, 1e-2, 0.1, 1e-3, 600, 512, 256},
    {"rn50-otsu-macenko", 2e-3, 25, 0.9, 0.75, 0.99, 1e-3, 0.3, 1e-4, 1000, 512, 256},
    {"rn50-5augs", 1e-3, 25, 0.6, 0.8, 0.99, 1e-4, 0.4, 1e-4, 700, 128, 32},
    {"rn50-10augs", 2e-3, 20, 0.75, 0.8, 0.99, 1e-2, 0.4, 1e-3, 700, 512, 256},
    {"rn50-20augs", 1e-3, 20, 0.75, 0.7, 0.999, 1e-3, 0.6, 1e-4, 1000, 512, 128},
};

}  // namespace

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& row : kPresets) out.emplace_back(row.name);
        return out;
    }();
    return names;
}

bool is_preset_name(const std::string& name) {
    for (const auto& row : kPresets) {
        if (name == row.name) return true;
    }
    return false;
}

TrainConfig preset_config(const std::string& name) {
    for (const auto& row : kPresets) {
        if (name != row.name) continue;
        TrainConfig c;
        c.learning_rate = row.lr;
        c.lr_decay_patience = row.patience;
        c.lr_decay_factor = row.factor;
        c.beta1 = row.beta1;
        c.beta2 = row.beta2;
        c.epsilon = row.epsilon;
        c.dropout = row.dropout;
        c.weight_decay = row.weight_decay;
        c.max_patches = row.max_patches;
        c.model_size = {row.m1, row.m2};
        return c;
    }
    throw config_error("unknown preset '" + name + "'");
}

}  // namespace slidemil
