#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "slidemil/image.hpp"

namespace slidemil {

// Integer HSV saturation in 0..255: round(255*(max-min)/max), 0 when max=0.
std::vector<std::uint8_t> saturation_channel(const RgbTile& tile);

struct SegmentOptions {
    bool median_filter = false;  // 3x3 majority smoothing of the mask
};

// Tissue = pixels whose saturation exceeds the threshold (default 8).
TissueMask segment_tissue_fixed(const RgbTile& tile, int threshold = 8,
                                const SegmentOptions& opts = {});

// Threshold maximising between-class variance of a 256-bin saturation
// histogram; ties break toward the smaller threshold. Low class is
// bins [0, t], high class is bins (t, 255].
int otsu_threshold(const std::array<std::uint64_t, 256>& histogram);

std::array<std::uint64_t, 256> saturation_histogram(const RgbTile& tile);

// Otsu-derived threshold plus a manual offset, then fixed-threshold
// segmentation.
TissueMask segment_tissue_otsu(const RgbTile& tile, int threshold_offset = 0,
                               const SegmentOptions& opts = {});

// Top-left (x, y) of every stride-aligned window fully inside the mask with
// tissue fraction >= min_tissue_fraction, in row-major order.
std::vector<std::array<std::uint32_t, 2>> patch_grid(const TissueMask& mask, int patch_px,
                                                     int stride_px, double min_tissue_fraction);

// Area-average (box filter) downsampling; factor must divide both dims.
// Channel averages round half up.
RgbTile downsample(const RgbTile& tile, int factor);

// (channel/255 - mean)/std per channel; output interleaved RGB doubles.
std::vector<double> channel_standardise(const RgbTile& tile, const std::array<double, 3>& means,
                                        const std::array<double, 3>& stds);

// Tissue boundaries drawn in green, boundaries of enclosed holes in blue.
RgbTile segmentation_preview(const RgbTile& tile, const TissueMask& mask);

}  // namespace slidemil
