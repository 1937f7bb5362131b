#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace slidemil {

using FeatureMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// One slide's patch features plus the level-0 pixel coordinate of each
// patch's top-left corner.
struct FeatureBag {
    std::string slide_id;
    FeatureMatrix features;                         // n_patches x dim
    std::vector<std::array<std::uint32_t, 2>> coords;  // (x, y) per patch
    std::uint32_t patch_size_px = 0;

    Eigen::Index n_patches() const { return features.rows(); }
    Eigen::Index dim() const { return features.cols(); }
};

// Throws if shapes disagree, the bag is empty, or features are non-finite.
void validate_bag(const FeatureBag& bag);

// FBAG container: magic "FBAG", u16 version, u32 n_patches, u32 dim,
// u32 patch_size_px, coords as little-endian u32 pairs, features row-major
// little-endian f32. Bit-exact round trip.
void write_feature_bag(const FeatureBag& bag, const std::string& path);
FeatureBag read_feature_bag(const std::string& path);

struct FeatureBagHeader {
    std::uint32_t n_patches = 0;
    std::uint32_t dim = 0;
    std::uint32_t patch_size_px = 0;
};

// Reads only the fixed-size header; used to validate dataset dimensions
// before any training starts.
FeatureBagHeader read_feature_bag_header(const std::string& path);

}  // namespace slidemil
