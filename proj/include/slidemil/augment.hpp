#pragma once

#include <cstdint>

#include "slidemil/image.hpp"

namespace slidemil {

// Jitter half-ranges for one augmented copy. A value of 0 disables the
// corresponding adjustment; the draw for each property is uniform over
// [-range, +range] (brightness, hue) or [1-range, 1+range] (contrast,
// saturation). seed makes the copy a pure function of (tile, params).
struct AugmentParams {
    double brightness_delta = 0.25;   // additive, in units of full scale
    double contrast_factor = 0.25;    // multiplicative half-range around 1
    double saturation_factor = 0.25;  // multiplicative half-range around 1
    double hue_shift = 0.04;          // fraction of the hue circle, <= 0.5
    std::uint64_t seed = 0;
};

void validate_augment_params(const AugmentParams& params);

// Applies brightness, contrast, saturation, hue in that fixed order.
// Zero-chroma pixels are unaffected by the saturation and hue steps.
RgbTile colour_augment(const RgbTile& tile, const AugmentParams& params);

}  // namespace slidemil
