#pragma once

#include <map>
#include <string>
#include <vector>

#include "slidemil/abmil.hpp"

namespace slidemil {

// Canonical names of the ten tunable hyperparameters, in schedule-file
// column order.
const std::vector<std::string>& hyperparameter_names();

bool is_hyperparameter_name(const std::string& name);

// Parses/applies one hyperparameter by name ("model_size" uses "M1xM2").
void set_hyperparameter(TrainConfig& config, const std::string& name, const std::string& value);
std::string get_hyperparameter(const TrainConfig& config, const std::string& name);

ModelSize parse_model_size(const std::string& text);
std::string format_model_size(ModelSize size);

// Full TrainConfig <-> key=value map (hyperparameters plus max_epochs, seed).
std::map<std::string, std::string> train_config_to_kv(const TrainConfig& config);
TrainConfig train_config_from_kv(const std::map<std::string, std::string>& kv,
                                 TrainConfig base = {});

}  // namespace slidemil
