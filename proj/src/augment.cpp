#include "slidemil/augment.hpp"

#include <algorithm>
#include <cmath>

#include "slidemil/errors.hpp"
#include "slidemil/rng.hpp"

namespace slidemil {

namespace {

double clamp255(double v) { return std::clamp(v, 0.0, 255.0); }

// ITU-R 601 luma, the grayscale anchor for contrast and saturation.
double luma(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

struct Hsv {
    double h;  // [0, 1)
    double s;
    double v;
};

Hsv rgb_to_hsv(double r, double g, double b) {
    const double hi = std::max({r, g, b});
    const double lo = std::min({r, g, b});
    const double chroma = hi - lo;
    Hsv out{0.0, 0.0, hi};
    if (chroma > 0.0) {
        if (hi == r) {
            out.h = std::fmod((g - b) / chroma, 6.0);
        } else if (hi == g) {
            out.h = (b - r) / chroma + 2.0;
        } else {
            out.h = (r - g) / chroma + 4.0;
        }
        out.h /= 6.0;
        if (out.h < 0.0) out.h += 1.0;
        out.s = chroma / hi;
    }
    return out;
}

void hsv_to_rgb(const Hsv& hsv, double& r, double& g, double& b) {
    const double h6 = hsv.h * 6.0;
    const double chroma = hsv.v * hsv.s;
    const double x = chroma * (1.0 - std::fabs(std::fmod(h6, 2.0) - 1.0));
    const double m = hsv.v - chroma;
    double rr = 0, gg = 0, bb = 0;
    if (h6 < 1) {
        rr = chroma, gg = x;
    } else if (h6 < 2) {
        rr = x, gg = chroma;
    } else if (h6 < 3) {
        gg = chroma, bb = x;
    } else if (h6 < 4) {
        gg = x, bb = chroma;
    } else if (h6 < 5) {
        rr = x, bb = chroma;
    } else {
        rr = chroma, bb = x;
    }
    r = rr + m;
    g = gg + m;
    b = bb + m;
}

}  // namespace

void validate_augment_params(const AugmentParams& params) {
    if (params.brightness_delta < 0.0 || params.contrast_factor < 0.0 ||
        params.saturation_factor < 0.0 || params.hue_shift < 0.0) {
        throw config_error("augmentation jitter ranges must be non-negative");
    }
    if (params.contrast_factor >= 1.0 || params.saturation_factor >= 1.0) {
        throw config_error("contrast/saturation jitter must keep factors positive (< 1)");
    }
    if (params.hue_shift > 0.5) {
        throw config_error("hue shift must stay within half the hue circle");
    }
}

RgbTile colour_augment(const RgbTile& tile, const AugmentParams& params) {
    validate_augment_params(params);
    Rng rng(params.seed);
    // One draw per property in fixed order so the jitter is a function of
    // the seed alone.
    const double brightness = rng.uniform(-params.brightness_delta, params.brightness_delta);
    const double contrast = rng.uniform(1.0 - params.contrast_factor, 1.0 + params.contrast_factor);
    const double saturation =
        rng.uniform(1.0 - params.saturation_factor, 1.0 + params.saturation_factor);
    const double hue = rng.uniform(-params.hue_shift, params.hue_shift);

    const std::size_t n = tile.pixel_count();
    std::vector<double> px(tile.pixels.begin(), tile.pixels.end());

    if (brightness != 0.0) {
        for (double& v : px) v = clamp255(v + brightness * 255.0);
    }
    if (contrast != 1.0) {
        double mean_luma = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            mean_luma += luma(px[i * 3], px[i * 3 + 1], px[i * 3 + 2]);
        }
        mean_luma /= static_cast<double>(n);
        for (double& v : px) v = clamp255(mean_luma + (v - mean_luma) * contrast);
    }
    if (saturation != 1.0) {
        for (std::size_t i = 0; i < n; ++i) {
            const double g = luma(px[i * 3], px[i * 3 + 1], px[i * 3 + 2]);
            for (int c = 0; c < 3; ++c) {
                px[i * 3 + c] = clamp255(g + (px[i * 3 + c] - g) * saturation);
            }
        }
    }
    if (hue != 0.0) {
        for (std::size_t i = 0; i < n; ++i) {
            Hsv hsv = rgb_to_hsv(px[i * 3], px[i * 3 + 1], px[i * 3 + 2]);
            if (hsv.s == 0.0) continue;  // zero chroma: hue rotation is a no-op
            hsv.h = std::fmod(hsv.h + hue + 1.0, 1.0);
            hsv_to_rgb(hsv, px[i * 3], px[i * 3 + 1], px[i * 3 + 2]);
        }
    }

    RgbTile out(tile.width, tile.height);
    for (std::size_t i = 0; i < px.size(); ++i) {
        out.pixels[i] = static_cast<std::uint8_t>(std::lround(clamp255(px[i])));
    }
    return out;
}

}  // namespace slidemil
