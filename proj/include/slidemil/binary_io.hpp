#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "slidemil/errors.hpp"

namespace slidemil {

// Little-endian fixed-width primitives for the FBAG and ABML formats.

inline void write_u16_le(std::ostream& out, std::uint16_t v) {
    const char bytes[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
    out.write(bytes, 2);
}

inline void write_u32_le(std::ostream& out, std::uint32_t v) {
    char bytes[4];
    for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(bytes, 4);
}

inline void write_f32_le(std::ostream& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    write_u32_le(out, bits);
}

inline void write_f64_le(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    out.write(bytes, 8);
}

inline void read_exact(std::istream& in, char* buf, std::size_t n, const char* what) {
    in.read(buf, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) {
        throw format_error(std::string("truncated file while reading ") + what);
    }
}

inline std::uint16_t read_u16_le(std::istream& in, const char* what) {
    unsigned char bytes[2];
    read_exact(in, reinterpret_cast<char*>(bytes), 2, what);
    return static_cast<std::uint16_t>(bytes[0] | (bytes[1] << 8));
}

inline std::uint32_t read_u32_le(std::istream& in, const char* what) {
    unsigned char bytes[4];
    read_exact(in, reinterpret_cast<char*>(bytes), 4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
    return v;
}

inline float read_f32_le(std::istream& in, const char* what) {
    const std::uint32_t bits = read_u32_le(in, what);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

inline double read_f64_le(std::istream& in, const char* what) {
    unsigned char bytes[8];
    read_exact(in, reinterpret_cast<char*>(bytes), 8, what);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

}  // namespace slidemil
