#pragma once

#include <string>
#include <vector>

#include "slidemil/abmil.hpp"

namespace slidemil {

// Built-in named training configurations, one per feature extractor
// (including the preprocessing-variant rows).
const std::vector<std::string>& preset_names();
bool is_preset_name(const std::string& name);
TrainConfig preset_config(const std::string& name);

}  // namespace slidemil
