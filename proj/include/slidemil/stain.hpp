#pragma once

#include <Eigen/Dense>
#include <array>

#include "slidemil/image.hpp"

namespace slidemil {

// ---------------------------------------------------------------------------
// Reinhard: per-channel moment matching in lab (logarithmic LMS) space.
// ---------------------------------------------------------------------------

struct LabStats {
    std::array<double, 3> mean{};
    std::array<double, 3> std{};
};

// Population mean/std of the tile in lab space.
LabStats measure_lab_stats(const RgbTile& tile);

// Shifts/scales each lab channel to the target statistics, then converts
// back to RGB with clamping. Throws degenerate_error when a source channel
// has zero spread.
RgbTile reinhard_normalise(const RgbTile& tile, const LabStats& target);

// ---------------------------------------------------------------------------
// Macenko: stain separation via the top-2 right singular vectors of the
// optical-density matrix, robust angular extremes as stain vectors.
// ---------------------------------------------------------------------------

struct MacenkoOptions {
    double od_cutoff = 0.15;              // total OD below this = transparent
    double angle_percentile_low = 1.0;    // robust extremes of the stain plane
    double angle_percentile_high = 99.0;
    double concentration_percentile = 99.0;
    int min_tissue_pixels = 100;
};

struct StainReference {
    Eigen::Matrix<double, 3, 2> stains;   // column-unit stain vectors
    Eigen::Vector2d max_concentration;    // reference percentile concentrations
};

// Widely used H&E reference stains and concentration scale.
StainReference default_stain_reference();

struct StainEstimate {
    Eigen::Matrix<double, 3, 2> stains;   // recovered source stain vectors (unit columns)
    Eigen::MatrixX2d concentrations;      // per pixel (all pixels), clamped at 0
    Eigen::Vector2d max_concentration;    // percentile concentrations over tissue
    std::size_t tissue_pixels = 0;
};

StainEstimate macenko_estimate(const RgbTile& tile, const MacenkoOptions& opts = {});

RgbTile macenko_normalise(const RgbTile& tile, const StainReference& reference,
                          const MacenkoOptions& opts = {});

// Measures a reference from a named tile (stains + concentration scale).
StainReference stain_reference_from_tile(const RgbTile& tile, const MacenkoOptions& opts = {});

// Optical density of one 8-bit intensity: -log10((v+1)/256).
double optical_density(int value);

}  // namespace slidemil
