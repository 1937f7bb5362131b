#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "slidemil/image.hpp"

namespace slidemil {

enum class AttentionNorm {
    Percentile,  // clamp at the 1st/99th percentiles, then minmax
    MinMax,
};

struct HeatmapSpec {
    int patch_px = 256;
    int stride_px = 128;  // recorded provenance; rendering uses the coords
    int downsample = 32;  // canvas scale relative to level-0 pixels
    AttentionNorm norm = AttentionNorm::Percentile;
    double opacity = 1.0;  // blend factor over the background
    std::string colormap = "viridis";
};

void validate_heatmap_spec(const HeatmapSpec& spec);

// Per-canvas-pixel attention: mean of the attention values of all patches
// covering the pixel; NaN where nothing is covered. Exposed separately so
// the overlap-averaging contract is testable before colouring.
struct ScoreMap {
    int width = 0;
    int height = 0;
    std::vector<double> scores;  // NaN = uncovered

    double at(int x, int y) const { return scores[static_cast<std::size_t>(y) * width + x]; }
};

ScoreMap accumulate_score_map(const std::vector<std::array<std::uint32_t, 2>>& coords,
                              const std::vector<double>& attention,
                              std::array<std::uint32_t, 2> slide_dims, const HeatmapSpec& spec);

// Normalised scores through the colormap, alpha-blended over the background
// (or white). Uncovered pixels keep the background.
RgbTile render_heatmap(const std::vector<std::array<std::uint32_t, 2>>& coords,
                       const std::vector<double>& attention,
                       std::array<std::uint32_t, 2> slide_dims, const HeatmapSpec& spec,
                       const std::optional<RgbTile>& background = std::nullopt);

struct AttentionStats {
    double min = 0.0;
    double max = 0.0;
    double entropy = 0.0;  // -sum a ln a
};

AttentionStats attention_stats(const std::vector<double>& attention);

// Sidecar text: spec echo, slide id and attention statistics.
void write_heatmap_sidecar(const std::string& path, const std::string& slide_id,
                           const HeatmapSpec& spec, const AttentionStats& stats,
                           std::size_t n_patches);

}  // namespace slidemil
