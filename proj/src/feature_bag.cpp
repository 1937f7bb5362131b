#include "slidemil/feature_bag.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "slidemil/binary_io.hpp"
#include "slidemil/errors.hpp"

namespace slidemil {

namespace {

constexpr char kMagic[4] = {'F', 'B', 'A', 'G'};
constexpr std::uint16_t kVersion = 1;

}  // namespace

void validate_bag(const FeatureBag& bag) {
    if (bag.n_patches() < 1) {
        throw shape_error("feature bag '" + bag.slide_id + "' has no patches");
    }
    if (bag.dim() < 1) {
        throw shape_error("feature bag '" + bag.slide_id + "' has zero feature dim");
    }
    if (bag.coords.size() != static_cast<std::size_t>(bag.n_patches())) {
        throw shape_error("feature bag '" + bag.slide_id + "': coords length " +
                          std::to_string(bag.coords.size()) + " != n_patches " +
                          std::to_string(bag.n_patches()));
    }
    if (bag.patch_size_px == 0) {
        throw shape_error("feature bag '" + bag.slide_id + "': patch_size_px must be positive");
    }
    if (!bag.features.allFinite()) {
        throw format_error("feature bag '" + bag.slide_id + "' contains NaN or Inf values");
    }
}

void write_feature_bag(const FeatureBag& bag, const std::string& path) {
    validate_bag(bag);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw io_error("cannot write feature bag '" + path + "'");
    }
    out.write(kMagic, 4);
    write_u16_le(out, kVersion);
    write_u32_le(out, static_cast<std::uint32_t>(bag.n_patches()));
    write_u32_le(out, static_cast<std::uint32_t>(bag.dim()));
    write_u32_le(out, bag.patch_size_px);
    for (const auto& c : bag.coords) {
        write_u32_le(out, c[0]);
        write_u32_le(out, c[1]);
    }
    for (Eigen::Index i = 0; i < bag.n_patches(); ++i) {
        for (Eigen::Index j = 0; j < bag.dim(); ++j) {
            write_f32_le(out, bag.features(i, j));
        }
    }
    if (!out) {
        throw io_error("failed writing feature bag '" + path + "'");
    }
}

namespace {

FeatureBagHeader read_header(std::istream& in, const std::string& path) {
    char magic[4];
    read_exact(in, magic, 4, "magic");
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw format_error("'" + path + "' is not an FBAG file (bad magic)");
    }
    const std::uint16_t version = read_u16_le(in, "version");
    if (version != kVersion) {
        throw format_error("'" + path + "': unsupported FBAG version " + std::to_string(version));
    }
    FeatureBagHeader h;
    h.n_patches = read_u32_le(in, "n_patches");
    h.dim = read_u32_le(in, "dim");
    h.patch_size_px = read_u32_le(in, "patch_size_px");
    if (h.n_patches == 0 || h.dim == 0 || h.patch_size_px == 0) {
        throw format_error("'" + path + "': zero n_patches, dim or patch_size_px");
    }
    return h;
}

}  // namespace

FeatureBagHeader read_feature_bag_header(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw io_error("cannot open feature bag '" + path + "'");
    }
    return read_header(in, path);
}

FeatureBag read_feature_bag(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw io_error("cannot open feature bag '" + path + "'");
    }
    const FeatureBagHeader h = read_header(in, path);

    FeatureBag bag;
    bag.slide_id = std::filesystem::path(path).stem().string();
    bag.patch_size_px = h.patch_size_px;

    // Bulk-read the payload; per-value stream reads are too slow for
    // full-sized bags (megabytes of features per slide).
    std::vector<unsigned char> coord_bytes(static_cast<std::size_t>(h.n_patches) * 8);
    read_exact(in, reinterpret_cast<char*>(coord_bytes.data()), coord_bytes.size(), "coords");
    bag.coords.resize(h.n_patches);
    for (std::uint32_t i = 0; i < h.n_patches; ++i) {
        const unsigned char* p = coord_bytes.data() + static_cast<std::size_t>(i) * 8;
        bag.coords[i][0] = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                           (static_cast<std::uint32_t>(p[2]) << 16) |
                           (static_cast<std::uint32_t>(p[3]) << 24);
        bag.coords[i][1] = static_cast<std::uint32_t>(p[4]) | (static_cast<std::uint32_t>(p[5]) << 8) |
                           (static_cast<std::uint32_t>(p[6]) << 16) |
                           (static_cast<std::uint32_t>(p[7]) << 24);
    }

    const std::size_t n_values = static_cast<std::size_t>(h.n_patches) * h.dim;
    std::vector<unsigned char> feature_bytes(n_values * 4);
    read_exact(in, reinterpret_cast<char*>(feature_bytes.data()), feature_bytes.size(),
               "features");
    bag.features.resize(h.n_patches, h.dim);
    float* dst = bag.features.data();  // row-major storage matches the file
    for (std::size_t v = 0; v < n_values; ++v) {
        const unsigned char* p = feature_bytes.data() + v * 4;
        const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) |
                                   (static_cast<std::uint32_t>(p[1]) << 8) |
                                   (static_cast<std::uint32_t>(p[2]) << 16) |
                                   (static_cast<std::uint32_t>(p[3]) << 24);
        float value;
        std::memcpy(&value, &bits, 4);
        if (!std::isfinite(value)) {
            throw format_error("'" + path + "': non-finite feature value at patch " +
                               std::to_string(v / h.dim));
        }
        dst[v] = value;
    }
    return bag;
}

}  // namespace slidemil
