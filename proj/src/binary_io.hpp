#pragma once

// Little-endian encode/decode helpers shared by the feature and checkpoint
// file formats.

#include "egospeak/error.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace egospeak::detail {

template <typename UInt>
void put_le(std::ostream &out, UInt v) {
    unsigned char bytes[sizeof(UInt)];
    for (std::size_t i = 0; i < sizeof(UInt); ++i) {
        bytes[i] = static_cast<unsigned char>(v >> (8 * i));
    }
    out.write(reinterpret_cast<const char *>(bytes), sizeof(UInt));
}

inline void put_f32(std::ostream &out, float v) { put_le(out, std::bit_cast<std::uint32_t>(v)); }

inline void put_f32_span(std::ostream &out, std::span<const float> values) {
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char *>(values.data()),
                  static_cast<std::streamsize>(values.size() * sizeof(float)));
    } else {
        for (float v : values) put_f32(out, v);
    }
}

// Reads exactly n bytes or throws Truncated.
inline void get_bytes(std::istream &in, void *dst, std::size_t n, const char *what) {
    in.read(static_cast<char *>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) {
        throw FileFormatError(FileErrc::Truncated, std::string("unexpected end of file in ") + what);
    }
}

template <typename UInt>
UInt get_le(std::istream &in, const char *what) {
    unsigned char bytes[sizeof(UInt)];
    get_bytes(in, bytes, sizeof(UInt), what);
    UInt v = 0;
    for (std::size_t i = 0; i < sizeof(UInt); ++i) {
        v |= static_cast<UInt>(bytes[i]) << (8 * i);
    }
    return v;
}

inline float get_f32(std::istream &in, const char *what) {
    return std::bit_cast<float>(get_le<std::uint32_t>(in, what));
}

inline void get_f32_span(std::istream &in, std::span<float> dst, const char *what) {
    get_bytes(in, dst.data(), dst.size() * sizeof(float), what);
    if constexpr (std::endian::native != std::endian::little) {
        for (float &v : dst) {
            auto u = std::bit_cast<std::uint32_t>(v);
            u = (u >> 24) | ((u >> 8) & 0xff00u) | ((u << 8) & 0xff0000u) | (u << 24);
            v = std::bit_cast<float>(u);
        }
    }
}

inline void expect_eof(std::istream &in, const char *what) {
    if (in.peek() != std::char_traits<char>::eof()) {
        throw FileFormatError(FileErrc::TrailingData, std::string("extra bytes after ") + what);
    }
}

} // namespace egospeak::detail
