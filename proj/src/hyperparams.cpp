#include "slidemil/hyperparams.hpp"

#include <algorithm>
#include <cstdlib>

#include "slidemil/errors.hpp"
#include "slidemil/numeric.hpp"

namespace slidemil {

namespace {

double parse_double(const std::string& name, const std::string& value) {
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0') {
        throw config_error("cannot parse '" + value + "' as a number for " + name);
    }
    return v;
}

long parse_long(const std::string& name, const std::string& value) {
    char* end = nullptr;
    const long v = std::strtol(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0') {
        throw config_error("cannot parse '" + value + "' as an integer for " + name);
    }
    return v;
}

}  // namespace

const std::vector<std::string>& hyperparameter_names() {
    static const std::vector<std::string> names = {
        "learning_rate", "weight_decay",      "beta1",           "beta2",      "epsilon",
        "lr_decay_patience", "lr_decay_factor", "model_size", "dropout", "max_patches"};
    return names;
}

bool is_hyperparameter_name(const std::string& name) {
    const auto& names = hyperparameter_names();
    return std::find(names.begin(), names.end(), name) != names.end();
}

ModelSize parse_model_size(const std::string& text) {
    const auto sep = text.find('x');
    if (sep == std::string::npos) {
        throw config_error("model_size must look like '512x128', got '" + text + "'");
    }
    ModelSize size;
    size.m1 = static_cast<int>(parse_long("model_size", text.substr(0, sep)));
    size.m2 = static_cast<int>(parse_long("model_size", text.substr(sep + 1)));
    if (size.m1 < 1 || size.m2 < 1) {
        throw config_error("model_size dimensions must be positive, got '" + text + "'");
    }
    return size;
}

std::string format_model_size(ModelSize size) {
    return std::to_string(size.m1) + "x" + std::to_string(size.m2);
}

void set_hyperparameter(TrainConfig& config, const std::string& name, const std::string& value) {
    if (name == "learning_rate") {
        config.learning_rate = parse_double(name, value);
    } else if (name == "weight_decay") {
        config.weight_decay = parse_double(name, value);
    } else if (name == "beta1") {
        config.beta1 = parse_double(name, value);
    } else if (name == "beta2") {
        config.beta2 = parse_double(name, value);
    } else if (name == "epsilon") {
        config.epsilon = parse_double(name, value);
    } else if (name == "lr_decay_patience") {
        config.lr_decay_patience = static_cast<int>(parse_long(name, value));
    } else if (name == "lr_decay_factor") {
        config.lr_decay_factor = parse_double(name, value);
    } else if (name == "model_size") {
        config.model_size = parse_model_size(value);
    } else if (name == "dropout") {
        config.dropout = parse_double(name, value);
    } else if (name == "max_patches") {
        config.max_patches = static_cast<int>(parse_long(name, value));
    } else {
        throw config_error("unknown hyperparameter '" + name + "'");
    }
}

std::string get_hyperparameter(const TrainConfig& config, const std::string& name) {
    if (name == "learning_rate") return format_double(config.learning_rate);
    if (name == "weight_decay") return format_double(config.weight_decay);
    if (name == "beta1") return format_double(config.beta1);
    if (name == "beta2") return format_double(config.beta2);
    if (name == "epsilon") return format_double(config.epsilon);
    if (name == "lr_decay_patience") return std::to_string(config.lr_decay_patience);
    if (name == "lr_decay_factor") return format_double(config.lr_decay_factor);
    if (name == "model_size") return format_model_size(config.model_size);
    if (name == "dropout") return format_double(config.dropout);
    if (name == "max_patches") return std::to_string(config.max_patches);
    throw config_error("unknown hyperparameter '" + name + "'");
}

std::map<std::string, std::string> train_config_to_kv(const TrainConfig& config) {
    std::map<std::string, std::string> kv;
    for (const auto& name : hyperparameter_names()) {
        kv[name] = get_hyperparameter(config, name);
    }
    kv["max_epochs"] = std::to_string(config.max_epochs);
    kv["seed"] = std::to_string(config.seed);
    return kv;
}

TrainConfig train_config_from_kv(const std::map<std::string, std::string>& kv, TrainConfig base) {
    for (const auto& [key, value] : kv) {
        if (is_hyperparameter_name(key)) {
            set_hyperparameter(base, key, value);
        } else if (key == "max_epochs") {
            base.max_epochs = static_cast<int>(parse_long(key, value));
        } else if (key == "seed") {
            base.seed = static_cast<std::uint64_t>(parse_long(key, value));
        } else {
            throw config_error("unknown training key '" + key + "'");
        }
    }
    return base;
}

}  // namespace slidemil
