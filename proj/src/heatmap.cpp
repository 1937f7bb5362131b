#include "slidemil/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "slidemil/colormap.hpp"
#include "slidemil/errors.hpp"
#include "slidemil/numeric.hpp"

namespace slidemil {

void validate_heatmap_spec(const HeatmapSpec& spec) {
    if (spec.patch_px < 1 || spec.stride_px < 1 || spec.downsample < 1) {
        throw config_error("heatmap patch, stride and downsample must be positive");
    }
    if (spec.stride_px > spec.patch_px || spec.patch_px % spec.stride_px != 0) {
        throw config_error("stride must divide the patch size (or equal it)");
    }
    if (spec.opacity < 0.0 || spec.opacity > 1.0) {
        throw config_error("overlay opacity must be in [0, 1]");
    }
}

ScoreMap accumulate_score_map(const std::vector<std::array<std::uint32_t, 2>>& coords,
                              const std::vector<double>& attention,
                              std::array<std::uint32_t, 2> slide_dims, const HeatmapSpec& spec) {
    validate_heatmap_spec(spec);
    if (coords.empty() || attention.empty()) {
        throw shape_error("heatmap needs at least one patch with attention");
    }
    if (coords.size() != attention.size()) {
        throw shape_error("coords and attention lengths disagree");
    }
    for (const auto& c : coords) {
        if (c[0] + static_cast<std::uint32_t>(spec.patch_px) > slide_dims[0] ||
            c[1] + static_cast<std::uint32_t>(spec.patch_px) > slide_dims[1]) {
            throw geometry_error("patch at (" + std::to_string(c[0]) + "," + std::to_string(c[1]) +
                                 ") extends outside the slide");
        }
    }

    ScoreMap map;
    map.width = static_cast<int>((slide_dims[0] + spec.downsample - 1) / spec.downsample);
    map.height = static_cast<int>((slide_dims[1] + spec.downsample - 1) / spec.downsample);
    std::vector<double> sum(static_cast<std::size_t>(map.width) * map.height, 0.0);
    std::vector<std::uint32_t> count(sum.size(), 0);

    for (std::size_t p = 0; p < coords.size(); ++p) {
        const int x0 = static_cast<int>(coords[p][0] / static_cast<std::uint32_t>(spec.downsample));
        const int y0 = static_cast<int>(coords[p][1] / static_cast<std::uint32_t>(spec.downsample));
        const int x1 = static_cast<int>(
            (coords[p][0] + spec.patch_px + spec.downsample - 1) /
            static_cast<std::uint32_t>(spec.downsample));
        const int y1 = static_cast<int>(
            (coords[p][1] + spec.patch_px + spec.downsample - 1) /
            static_cast<std::uint32_t>(spec.downsample));
        for (int y = y0; y < std::min(y1, map.height); ++y) {
            for (int x = x0; x < std::min(x1, map.width); ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * map.width + x;
                sum[i] += attention[p];
                count[i] += 1;
            }
        }
    }

    map.scores.assign(sum.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < sum.size(); ++i) {
        if (count[i] > 0) map.scores[i] = sum[i] / count[i];
    }
    return map;
}

namespace {

// Normalises covered scores to [0, 1]; a flat map maps to 1 so a lone patch
// renders at full intensity.
void normalise_scores(ScoreMap& map, AttentionNorm norm) {
    std::vector<double> covered;
    for (double v : map.scores) {
        if (!std::isnan(v)) covered.push_back(v);
    }
    double lo, hi;
    if (norm == AttentionNorm::Percentile) {
        lo = percentile(covered, 1.0);
        hi = percentile(covered, 99.0);
    } else {
        lo = *std::min_element(covered.begin(), covered.end());
        hi = *std::max_element(covered.begin(), covered.end());
    }
    for (double& v : map.scores) {
        if (std::isnan(v)) continue;
        v = hi > lo ? std::clamp((v - lo) / (hi - lo), 0.0, 1.0) : 1.0;
    }
}

}  // namespace

RgbTile render_heatmap(const std::vector<std::array<std::uint32_t, 2>>& coords,
                       const std::vector<double>& attention,
                       std::array<std::uint32_t, 2> slide_dims, const HeatmapSpec& spec,
                       const std::optional<RgbTile>& background) {
    ScoreMap map = accumulate_score_map(coords, attention, slide_dims, spec);
    normalise_scores(map, spec.norm);

    RgbTile canvas(map.width, map.height, 255);
    if (background) {
        if (background->width != map.width || background->height != map.height) {
            throw geometry_error("background tile must match the downsampled canvas (" +
                                 std::to_string(map.width) + "x" + std::to_string(map.height) +
                                 ")");
        }
        canvas = *background;
    }
    for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
            const double v = map.at(x, y);
            if (std::isnan(v)) continue;
            const auto colour = colormap_lookup(v);
            for (int c = 0; c < 3; ++c) {
                const double blended =
                    spec.opacity * colour[static_cast<std::size_t>(c)] +
                    (1.0 - spec.opacity) * canvas.at(x, y, c);
                canvas.at(x, y, c) = static_cast<std::uint8_t>(std::lround(blended));
            }
        }
    }
    return canvas;
}

AttentionStats attention_stats(const std::vector<double>& attention) {
    if (attention.empty()) {
        throw shape_error("attention statistics need a non-empty vector");
    }
    AttentionStats stats;
    stats.min = *std::min_element(attention.begin(), attention.end());
    stats.max = *std::max_element(attention.begin(), attention.end());
    stats.entropy = 0.0;
    for (double a : attention) {
        if (a > 0.0) stats.entropy -= a * std::log(a);
    }
    return stats;
}

void write_heatmap_sidecar(const std::string& path, const std::string& slide_id,
                           const HeatmapSpec& spec, const AttentionStats& stats,
                           std::size_t n_patches) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw io_error("cannot write heatmap sidecar '" + path + "'");
    }
    out << "slide_id=" << slide_id << '\n'
        << "n_patches=" << n_patches << '\n'
        << "patch_px=" << spec.patch_px << '\n'
        << "stride_px=" << spec.stride_px << '\n'
        << "downsample=" << spec.downsample << '\n'
        << "normalisation=" << (spec.norm == AttentionNorm::Percentile ? "percentile" : "minmax")
        << '\n'
        << "opacity=" << format_double(spec.opacity) << '\n'
        << "colormap=" << spec.colormap << '\n'
        << "attention_min=" << format_double(stats.min) << '\n'
        << "attention_max=" << format_double(stats.max) << '\n'
        << "attention_entropy=" << format_double(stats.entropy) << '\n';
}

}  // namespace slidemil
