#pragma once

#include <array>
#include <cstdint>

namespace slidemil {

// 256-entry perceptually uniform RGB ramp (viridis).
const std::array<std::array<std::uint8_t, 3>, 256>& viridis_lut();

// Maps u in [0,1] to a ramp entry.
std::array<std::uint8_t, 3> colormap_lookup(double u);

}  // namespace slidemil
