#include "slidemil/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "slidemil/errors.hpp"

namespace slidemil {

std::vector<std::uint8_t> saturation_channel(const RgbTile& tile) {
    std::vector<std::uint8_t> sat(tile.pixel_count());
    for (std::size_t i = 0; i < tile.pixel_count(); ++i) {
        const int r = tile.pixels[i * 3];
        const int g = tile.pixels[i * 3 + 1];
        const int b = tile.pixels[i * 3 + 2];
        const int hi = std::max({r, g, b});
        const int lo = std::min({r, g, b});
        sat[i] = hi == 0 ? 0
                         : static_cast<std::uint8_t>(
                               std::lround(255.0 * static_cast<double>(hi - lo) / hi));
    }
    return sat;
}

namespace {

TissueMask majority_filter_3x3(const TissueMask& mask) {
    TissueMask out(mask.width, mask.height);
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            int ones = 0, total = 0;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int nx = x + dx, ny = y + dy;
                    if (nx < 0 || ny < 0 || nx >= mask.width || ny >= mask.height) continue;
                    ++total;
                    ones += mask.at(nx, ny);
                }
            }
            out.at(x, y) = 2 * ones > total ? 1 : 0;
        }
    }
    return out;
}

}  // namespace

TissueMask segment_tissue_fixed(const RgbTile& tile, int threshold, const SegmentOptions& opts) {
    if (threshold < 0 || threshold > 255) {
        throw config_error("saturation threshold must be in [0,255], got " +
                           std::to_string(threshold));
    }
    const auto sat = saturation_channel(tile);
    TissueMask mask(tile.width, tile.height);
    for (std::size_t i = 0; i < sat.size(); ++i) {
        mask.values[i] = sat[i] > threshold ? 1 : 0;
    }
    return opts.median_filter ? majority_filter_3x3(mask) : mask;
}

std::array<std::uint64_t, 256> saturation_histogram(const RgbTile& tile) {
    std::array<std::uint64_t, 256> hist{};
    for (std::uint8_t s : saturation_channel(tile)) ++hist[s];
    return hist;
}

int otsu_threshold(const std::array<std::uint64_t, 256>& histogram) {
    std::uint64_t total = 0;
    int populated = 0;
    double weighted_total = 0.0;
    for (int i = 0; i < 256; ++i) {
        total += histogram[i];
        if (histogram[i] > 0) ++populated;
        weighted_total += static_cast<double>(i) * static_cast<double>(histogram[i]);
    }
    if (total < 2 || populated < 2) {
        throw degenerate_error("Otsu needs a histogram with at least two populated bins");
    }

    int best_t = 0;
    double best_var = -1.0;
    std::uint64_t count_low = 0;
    double weighted_low = 0.0;
    for (int t = 0; t <= 254; ++t) {
        count_low += histogram[t];
        weighted_low += static_cast<double>(t) * static_cast<double>(histogram[t]);
        const std::uint64_t count_high = total - count_low;
        if (count_low == 0 || count_high == 0) continue;
        const double mean_low = weighted_low / static_cast<double>(count_low);
        const double mean_high = (weighted_total - weighted_low) / static_cast<double>(count_high);
        const double diff = mean_high - mean_low;
        const double var = static_cast<double>(count_low) * static_cast<double>(count_high) *
                           diff * diff;
        if (var > best_var) {
            best_var = var;
            best_t = t;
        }
    }
    return best_t;
}

TissueMask segment_tissue_otsu(const RgbTile& tile, int threshold_offset,
                               const SegmentOptions& opts) {
    const int t = otsu_threshold(saturation_histogram(tile));
    const int adjusted = std::clamp(t + threshold_offset, 0, 255);
    return segment_tissue_fixed(tile, adjusted, opts);
}

std::vector<std::array<std::uint32_t, 2>> patch_grid(const TissueMask& mask, int patch_px,
                                                     int stride_px, double min_tissue_fraction) {
    if (patch_px <= 0 || stride_px <= 0) {
        throw geometry_error("patch and stride must be positive");
    }
    if (patch_px > mask.width || patch_px > mask.height) {
        throw geometry_error("patch size " + std::to_string(patch_px) +
                             " exceeds mask dimensions " + std::to_string(mask.width) + "x" +
                             std::to_string(mask.height));
    }

    // Column sums via an integral image keep this linear in pixels.
    const int w = mask.width, h = mask.height;
    std::vector<std::uint64_t> integral(static_cast<std::size_t>(w + 1) * (h + 1), 0);
    auto I = [&](int x, int y) -> std::uint64_t& {
        return integral[static_cast<std::size_t>(y) * (w + 1) + x];
    };
    for (int y = 1; y <= h; ++y) {
        for (int x = 1; x <= w; ++x) {
            I(x, y) = mask.at(x - 1, y - 1) + I(x - 1, y) + I(x, y - 1) - I(x - 1, y - 1);
        }
    }

    const double area = static_cast<double>(patch_px) * patch_px;
    std::vector<std::array<std::uint32_t, 2>> coords;
    for (int y = 0; y + patch_px <= h; y += stride_px) {
        for (int x = 0; x + patch_px <= w; x += stride_px) {
            const std::uint64_t tissue = I(x + patch_px, y + patch_px) - I(x, y + patch_px) -
                                         I(x + patch_px, y) + I(x, y);
            if (static_cast<double>(tissue) / area >= min_tissue_fraction) {
                coords.push_back({static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y)});
            }
        }
    }
    return coords;
}

RgbTile downsample(const RgbTile& tile, int factor) {
    if (factor <= 0 || tile.width % factor != 0 || tile.height % factor != 0) {
        throw geometry_error("downsample factor " + std::to_string(factor) +
                             " does not divide " + std::to_string(tile.width) + "x" +
                             std::to_string(tile.height));
    }
    RgbTile out(tile.width / factor, tile.height / factor);
    const double area = static_cast<double>(factor) * factor;
    for (int oy = 0; oy < out.height; ++oy) {
        for (int ox = 0; ox < out.width; ++ox) {
            for (int c = 0; c < 3; ++c) {
                std::uint64_t acc = 0;
                for (int dy = 0; dy < factor; ++dy) {
                    for (int dx = 0; dx < factor; ++dx) {
                        acc += tile.at(ox * factor + dx, oy * factor + dy, c);
                    }
                }
                out.at(ox, oy, c) =
                    static_cast<std::uint8_t>(std::floor(static_cast<double>(acc) / area + 0.5));
            }
        }
    }
    return out;
}

std::vector<double> channel_standardise(const RgbTile& tile, const std::array<double, 3>& means,
                                        const std::array<double, 3>& stds) {
    for (double s : stds) {
        if (s <= 0.0) {
            throw config_error("channel standardisation stds must be positive");
        }
    }
    std::vector<double> out(tile.pixels.size());
    for (std::size_t i = 0; i < tile.pixels.size(); ++i) {
        const int c = static_cast<int>(i % 3);
        out[i] = (tile.pixels[i] / 255.0 - means[c]) / stds[c];
    }
    return out;
}

RgbTile segmentation_preview(const RgbTile& tile, const TissueMask& mask) {
    if (tile.width != mask.width || tile.height != mask.height) {
        throw shape_error("preview mask dimensions do not match tile");
    }
    // Background pixels connected to the border stay "outside"; the rest of
    // the background forms holes inside tissue.
    const int w = mask.width, h = mask.height;
    std::vector<std::uint8_t> outside(static_cast<std::size_t>(w) * h, 0);
    std::deque<std::pair<int, int>> queue;
    auto push = [&](int x, int y) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        if (mask.values[i] == 0 && !outside[i]) {
            outside[i] = 1;
            queue.emplace_back(x, y);
        }
    };
    for (int x = 0; x < w; ++x) {
        push(x, 0);
        push(x, h - 1);
    }
    for (int y = 0; y < h; ++y) {
        push(0, y);
        push(w - 1, y);
    }
    while (!queue.empty()) {
        const auto [x, y] = queue.front();
        queue.pop_front();
        if (x > 0) push(x - 1, y);
        if (x + 1 < w) push(x + 1, y);
        if (y > 0) push(x, y - 1);
        if (y + 1 < h) push(x, y + 1);
    }

    RgbTile out = tile;
    auto neighbour_state = [&](int x, int y, bool& next_to_outside, bool& next_to_hole) {
        const int dx[4] = {-1, 1, 0, 0};
        const int dy[4] = {0, 0, -1, 1};
        for (int k = 0; k < 4; ++k) {
            const int nx = x + dx[k], ny = y + dy[k];
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) {
                next_to_outside = true;
                continue;
            }
            const std::size_t i = static_cast<std::size_t>(ny) * w + nx;
            if (mask.values[i] == 0) {
                (outside[i] ? next_to_outside : next_to_hole) = true;
            }
        }
    };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!mask.at(x, y)) continue;
            bool next_to_outside = false, next_to_hole = false;
            neighbour_state(x, y, next_to_outside, next_to_hole);
            if (next_to_outside) {
                out.at(x, y, 0) = 0;
                out.at(x, y, 1) = 200;
                out.at(x, y, 2) = 0;
            } else if (next_to_hole) {
                out.at(x, y, 0) = 0;
                out.at(x, y, 1) = 0;
                out.at(x, y, 2) = 220;
            }
        }
    }
    return out;
}

}  // namespace slidemil
