#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace slidemil {

// 8-bit RGB raster, row-major, interleaved channels.
struct RgbTile {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // height * width * 3

    RgbTile() = default;
    RgbTile(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill) {}

    std::uint8_t& at(int x, int y, int c) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
    std::uint8_t at(int x, int y, int c) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

    bool operator==(const RgbTile& other) const = default;
};

// Binary tissue/background mask with the dimensions of its source tile.
struct TissueMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> values;  // 0 = background, 1 = tissue

    TissueMask() = default;
    TissueMask(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

    std::uint8_t& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int x, int y) const {
        return values[static_cast<std::size_t>(y) * width + x];
    }

    bool operator==(const TissueMask& other) const = default;
};

// PNG I/O. Reading expands grayscale/palette/alpha inputs to 8-bit RGB.
RgbTile read_png(const std::string& path);
void write_png(const RgbTile& tile, const std::string& path);
void write_mask_png(const TissueMask& mask, const std::string& path);
TissueMask read_mask_png(const std::string& path);

}  // namespace slidemil
