#include "slidemil/image.hpp"

#include <png.h>

#include <cstdio>
#include <memory>

#include "slidemil/errors.hpp"

namespace slidemil {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

RgbTile read_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) {
        throw io_error("cannot open PNG '" + path + "'");
    }
    png_byte header[8];
    if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8) != 0) {
        throw format_error("'" + path + "' is not a PNG file");
    }

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw error("libpng initialisation failed");
    }
    RgbTile tile;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw format_error("failed to decode PNG '" + path + "'");
    }
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);

    tile.width = static_cast<int>(png_get_image_width(png, info));
    tile.height = static_cast<int>(png_get_image_height(png, info));
    tile.pixels.resize(static_cast<std::size_t>(tile.width) * tile.height * 3);
    rows.resize(tile.height);
    for (int y = 0; y < tile.height; ++y) {
        rows[y] = tile.pixels.data() + static_cast<std::size_t>(y) * tile.width * 3;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return tile;
}

namespace {

void write_png_impl(const std::string& path, int width, int height, int color_type,
                    const std::vector<png_bytep>& rows) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) {
        throw io_error("cannot write PNG '" + path + "'");
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw error("libpng initialisation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw io_error("failed to encode PNG '" + path + "'");
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                 color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, const_cast<png_bytepp>(rows.data()));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace

void write_png(const RgbTile& tile, const std::string& path) {
    if (tile.width <= 0 || tile.height <= 0) {
        throw geometry_error("cannot write empty tile to '" + path + "'");
    }
    std::vector<png_bytep> rows(tile.height);
    for (int y = 0; y < tile.height; ++y) {
        rows[y] = const_cast<png_bytep>(tile.pixels.data() +
                                        static_cast<std::size_t>(y) * tile.width * 3);
    }
    write_png_impl(path, tile.width, tile.height, PNG_COLOR_TYPE_RGB, rows);
}

void write_mask_png(const TissueMask& mask, const std::string& path) {
    if (mask.width <= 0 || mask.height <= 0) {
        throw geometry_error("cannot write empty mask to '" + path + "'");
    }
    std::vector<std::uint8_t> gray(mask.values.size());
    for (std::size_t i = 0; i < mask.values.size(); ++i) {
        gray[i] = mask.values[i] ? 255 : 0;
    }
    std::vector<png_bytep> rows(mask.height);
    for (int y = 0; y < mask.height; ++y) {
        rows[y] = gray.data() + static_cast<std::size_t>(y) * mask.width;
    }
    write_png_impl(path, mask.width, mask.height, PNG_COLOR_TYPE_GRAY, rows);
}

TissueMask read_mask_png(const std::string& path) {
    const RgbTile rgb = read_png(path);
    TissueMask mask(rgb.width, rgb.height);
    for (int y = 0; y < rgb.height; ++y) {
        for (int x = 0; x < rgb.width; ++x) {
            mask.at(x, y) = rgb.at(x, y, 0) >= 128 ? 1 : 0;
        }
    }
    return mask;
}

}  // namespace slidemil
