#include "slidemil/stain.hpp"

#include <cmath>
#include <vector>

#include "slidemil/errors.hpp"
#include "slidemil/numeric.hpp"

namespace slidemil {

namespace {

// RGB -> LMS (Reinhard 2001); the return path uses the numeric inverse so
// the two directions compose to identity up to rounding.
const Eigen::Matrix3d kRgbToLms = (Eigen::Matrix3d() << 0.3811, 0.5783, 0.0402,  //
                                   0.1967, 0.7244, 0.0782,                        //
                                   0.0241, 0.1288, 0.8444)
                                      .finished();
const Eigen::Matrix3d kLmsToRgb = kRgbToLms.inverse();

constexpr double kInvSqrt3 = 0.5773502691896258;
constexpr double kInvSqrt6 = 0.4082482904638630;
constexpr double kInvSqrt2 = 0.7071067811865476;

Eigen::Vector3d rgb_to_lab(double r, double g, double b) {
    // Floor at 1/255 keeps the logarithm defined on black pixels.
    const Eigen::Vector3d rgb(std::max(r, 1.0) / 255.0, std::max(g, 1.0) / 255.0,
                              std::max(b, 1.0) / 255.0);
    const Eigen::Vector3d lms = (kRgbToLms * rgb).cwiseMax(1e-6).array().log10();
    return {kInvSqrt3 * (lms[0] + lms[1] + lms[2]), kInvSqrt6 * (lms[0] + lms[1] - 2.0 * lms[2]),
            kInvSqrt2 * (lms[0] - lms[1])};
}

Eigen::Vector3d lab_to_rgb(const Eigen::Vector3d& lab) {
    Eigen::Vector3d log_lms;
    log_lms[0] = kInvSqrt3 * lab[0] + kInvSqrt6 * lab[1] + kInvSqrt2 * lab[2];
    log_lms[1] = kInvSqrt3 * lab[0] + kInvSqrt6 * lab[1] - kInvSqrt2 * lab[2];
    log_lms[2] = kInvSqrt3 * lab[0] - 2.0 * kInvSqrt6 * lab[1];
    const Eigen::Vector3d lms = Eigen::pow(10.0, log_lms.array());
    return (kLmsToRgb * lms) * 255.0;
}

std::uint8_t to_u8(double v) {
    return static_cast<std::uint8_t>(std::clamp<long>(std::lround(v), 0, 255));
}

}  // namespace

LabStats measure_lab_stats(const RgbTile& tile) {
    const std::size_t n = tile.pixel_count();
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    Eigen::Vector3d sumsq = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector3d lab = rgb_to_lab(tile.pixels[i * 3], tile.pixels[i * 3 + 1],
                                               tile.pixels[i * 3 + 2]);
        sum += lab;
        sumsq += lab.cwiseProduct(lab);
    }
    LabStats stats;
    for (int c = 0; c < 3; ++c) {
        const double mean = sum[c] / static_cast<double>(n);
        const double var = std::max(0.0, sumsq[c] / static_cast<double>(n) - mean * mean);
        stats.mean[c] = mean;
        stats.std[c] = std::sqrt(var);
    }
    return stats;
}

RgbTile reinhard_normalise(const RgbTile& tile, const LabStats& target) {
    const LabStats src = measure_lab_stats(tile);
    for (int c = 0; c < 3; ++c) {
        if (src.std[c] < 1e-9) {
            throw degenerate_error("tile has zero spread in lab channel " + std::to_string(c));
        }
    }
    RgbTile out(tile.width, tile.height);
    for (std::size_t i = 0; i < tile.pixel_count(); ++i) {
        Eigen::Vector3d lab = rgb_to_lab(tile.pixels[i * 3], tile.pixels[i * 3 + 1],
                                         tile.pixels[i * 3 + 2]);
        for (int c = 0; c < 3; ++c) {
            lab[c] = (lab[c] - src.mean[c]) * (target.std[c] / src.std[c]) + target.mean[c];
        }
        const Eigen::Vector3d rgb = lab_to_rgb(lab);
        for (int c = 0; c < 3; ++c) {
            out.pixels[i * 3 + c] = to_u8(rgb[c]);
        }
    }
    return out;
}

double optical_density(int value) { return -std::log10((value + 1.0) / 256.0); }

StainReference default_stain_reference() {
    StainReference ref;
    ref.stains << 0.5626, 0.2159,  //
        0.7201, 0.8012,            //
        0.4062, 0.5581;
    ref.max_concentration << 1.9705, 1.0308;
    return ref;
}

StainEstimate macenko_estimate(const RgbTile& tile, const MacenkoOptions& opts) {
    const std::size_t n = tile.pixel_count();
    Eigen::MatrixX3d od(n, 3);
    std::vector<std::size_t> tissue;
    tissue.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (int c = 0; c < 3; ++c) {
            od(static_cast<Eigen::Index>(i), c) = optical_density(tile.pixels[i * 3 + c]);
        }
        if (od.row(static_cast<Eigen::Index>(i)).sum() >= opts.od_cutoff) {
            tissue.push_back(i);
        }
    }
    if (tissue.size() < static_cast<std::size_t>(opts.min_tissue_pixels)) {
        throw degenerate_error("insufficient tissue: " + std::to_string(tissue.size()) +
                               " pixels above the OD cutoff, need " +
                               std::to_string(opts.min_tissue_pixels));
    }

    Eigen::MatrixX3d od_tissue(tissue.size(), 3);
    for (std::size_t i = 0; i < tissue.size(); ++i) {
        od_tissue.row(static_cast<Eigen::Index>(i)) = od.row(static_cast<Eigen::Index>(tissue[i]));
    }

    // Right singular vectors of the tissue OD matrix via the 3x3 Gram matrix.
    const Eigen::Matrix3d gram = od_tissue.transpose() * od_tissue;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(gram);
    const Eigen::Vector3d evals = eig.eigenvalues();  // ascending
    if (evals[1] <= std::max(1e-12 * evals[2], 1e-15)) {
        throw degenerate_error("rank-deficient OD matrix: tile has a single stain direction");
    }
    Eigen::Vector3d v1 = eig.eigenvectors().col(2);
    Eigen::Vector3d v2 = eig.eigenvectors().col(1);
    if ((od_tissue * v1).sum() < 0.0) v1 = -v1;
    if ((od_tissue * v2).sum() < 0.0) v2 = -v2;

    std::vector<double> angles(tissue.size());
    for (Eigen::Index i = 0; i < od_tissue.rows(); ++i) {
        angles[static_cast<std::size_t>(i)] =
            std::atan2(od_tissue.row(i).dot(v2), od_tissue.row(i).dot(v1));
    }
    const double a_lo = percentile(angles, opts.angle_percentile_low);
    const double a_hi = percentile(angles, opts.angle_percentile_high);

    auto plane_vector = [&](double angle) {
        Eigen::Vector3d v = std::cos(angle) * v1 + std::sin(angle) * v2;
        if (v.sum() < 0.0) v = -v;
        return v;
    };
    const Eigen::Vector3d extreme_lo = plane_vector(a_lo);
    const Eigen::Vector3d extreme_hi = plane_vector(a_hi);

    StainEstimate est;
    // Convention: the stain with larger red-channel absorbance goes first.
    if (extreme_lo[0] > extreme_hi[0]) {
        est.stains.col(0) = extreme_lo;
        est.stains.col(1) = extreme_hi;
    } else {
        est.stains.col(0) = extreme_hi;
        est.stains.col(1) = extreme_lo;
    }

    // Non-negative least squares per pixel (2 unknowns): plain least squares
    // followed by clamping, adequate for well-separated stains.
    const Eigen::Matrix2d normal = est.stains.transpose() * est.stains;
    const Eigen::Matrix<double, 2, 3> solver = normal.inverse() * est.stains.transpose();
    est.concentrations.resize(static_cast<Eigen::Index>(n), 2);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
        const Eigen::Vector2d c = solver * od.row(i).transpose();
        est.concentrations(i, 0) = std::max(0.0, c[0]);
        est.concentrations(i, 1) = std::max(0.0, c[1]);
    }

    for (int k = 0; k < 2; ++k) {
        std::vector<double> conc(tissue.size());
        for (std::size_t i = 0; i < tissue.size(); ++i) {
            conc[i] = est.concentrations(static_cast<Eigen::Index>(tissue[i]), k);
        }
        est.max_concentration[k] = percentile(conc, opts.concentration_percentile);
    }
    est.tissue_pixels = tissue.size();
    return est;
}

RgbTile macenko_normalise(const RgbTile& tile, const StainReference& reference,
                          const MacenkoOptions& opts) {
    const StainEstimate est = macenko_estimate(tile, opts);
    Eigen::Vector2d scale;
    for (int k = 0; k < 2; ++k) {
        scale[k] = est.max_concentration[k] > 1e-12
                       ? reference.max_concentration[k] / est.max_concentration[k]
                       : 0.0;
    }
    RgbTile out(tile.width, tile.height);
    for (std::size_t i = 0; i < tile.pixel_count(); ++i) {
        const Eigen::Vector2d c =
            est.concentrations.row(static_cast<Eigen::Index>(i)).transpose().cwiseProduct(scale);
        const Eigen::Vector3d od_new = reference.stains * c;
        for (int ch = 0; ch < 3; ++ch) {
            out.pixels[i * 3 + ch] = to_u8(256.0 * std::pow(10.0, -od_new[ch]) - 1.0);
        }
    }
    return out;
}

StainReference stain_reference_from_tile(const RgbTile& tile, const MacenkoOptions& opts) {
    const StainEstimate est = macenko_estimate(tile, opts);
    return {est.stains, est.max_concentration};
}

}  // namespace slidemil
