#pragma once

#include "repose/math.hpp"

#include <zlib.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

namespace repose {

// Image with double storage, row-major from the top-left, interleaved
// channels. Kept in double so finite-difference checks against the renderer
// are not limited by storage quantization; files quantize at the boundary
// (PFM to float32, PNG to 8 bit).
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<double> data;

    static Image zeros(int w, int h, int c) {
        Image img;
        img.width = w;
        img.height = h;
        img.channels = c;
        img.data.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) *
                            static_cast<std::size_t>(c),
                        0.0);
        return img;
    }

    double& at(int x, int y, int c) {
        return data[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                     static_cast<std::size_t>(x)) *
                        static_cast<std::size_t>(channels) +
                    static_cast<std::size_t>(c)];
    }
    double at(int x, int y, int c) const {
        return data[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                     static_cast<std::size_t>(x)) *
                        static_cast<std::size_t>(channels) +
                    static_cast<std::size_t>(c)];
    }

    Vec3 pixel3(int x, int y) const { return Vec3(at(x, y, 0), at(x, y, 1), at(x, y, 2)); }
    void set_pixel3(int x, int y, const Vec3& v) {
        at(x, y, 0) = v.x();
        at(x, y, 1) = v.y();
        at(x, y, 2) = v.z();
    }

    bool same_shape(const Image& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }
};

// --------------------------------------------------------------------------
// PFM: 32-bit float payload. "PF" for 3 channels, "Pf" for 1. Scanlines are
// stored bottom-to-top; a negative scale marks little-endian.

inline void write_pfm(const Image& img, const std::string& path) {
    require(img.channels == 1 || img.channels == 3, "write_pfm: 1 or 3 channels only");
    std::ofstream f(path, std::ios::binary);
    if (!f) fail("write_pfm: cannot open " + path);
    f << (img.channels == 3 ? "PF" : "Pf") << "\n" << img.width << " " << img.height << "\n-1.0\n";
    const std::size_t row = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.channels);
    std::vector<float> buffer(row);
    for (int y = img.height - 1; y >= 0; --y) {
        const double* src = &img.data[static_cast<std::size_t>(y) * row];
        for (std::size_t i = 0; i < row; ++i) buffer[i] = static_cast<float>(src[i]);
        f.write(reinterpret_cast<const char*>(buffer.data()),
                static_cast<std::streamsize>(sizeof(float) * row));
    }
    if (!f) fail("write_pfm: write failed for " + path);
}

inline Image read_pfm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail("read_pfm: cannot open " + path);
    std::string magic;
    f >> magic;
    require(magic == "PF" || magic == "Pf", "read_pfm: not a PFM file: " + path);
    Image img;
    img.channels = magic == "PF" ? 3 : 1;
    double scale;
    f >> img.width >> img.height >> scale;
    require(img.width > 0 && img.height > 0, "read_pfm: bad dimensions in " + path);
    require(scale < 0.0, "read_pfm: big-endian PFM not supported: " + path);
    f.get();  // single whitespace after the scale
    const std::size_t row = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.channels);
    img.data.resize(row * static_cast<std::size_t>(img.height));
    std::vector<float> buffer(row);
    for (int y = img.height - 1; y >= 0; --y) {
        f.read(reinterpret_cast<char*>(buffer.data()),
               static_cast<std::streamsize>(sizeof(float) * row));
        double* dst = &img.data[static_cast<std::size_t>(y) * row];
        for (std::size_t i = 0; i < row; ++i) dst[i] = buffer[i];
    }
    if (!f) fail("read_pfm: truncated payload in " + path);
    return img;
}

// --------------------------------------------------------------------------
// PNG: 8-bit, inspection output. Fixed zlib level and no ancillary chunks so
// identical pixels produce identical bytes.

namespace detail {

inline void png_be32(std::vector<unsigned char>& v, std::uint32_t x) {
    v.push_back(static_cast<unsigned char>(x >> 24));
    v.push_back(static_cast<unsigned char>(x >> 16));
    v.push_back(static_cast<unsigned char>(x >> 8));
    v.push_back(static_cast<unsigned char>(x));
}

inline void png_chunk(std::ofstream& f, const char type[4], const std::vector<unsigned char>& payload) {
    std::vector<unsigned char> head;
    png_be32(head, static_cast<std::uint32_t>(payload.size()));
    f.write(reinterpret_cast<const char*>(head.data()), 4);
    f.write(type, 4);
    if (!payload.empty()) f.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
    std::uint32_t crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(type), 4);
    if (!payload.empty()) crc = crc32(crc, payload.data(), static_cast<uInt>(payload.size()));
    std::vector<unsigned char> tail;
    png_be32(tail, crc);
    f.write(reinterpret_cast<const char*>(tail.data()), 4);
}

}  // namespace detail

// Writes 1-channel (grayscale) or 3-channel (RGB) images; values are clamped
// to [0,1] and quantized to 8 bits.
inline void write_png(const Image& img, const std::string& path) {
    require(img.channels == 1 || img.channels == 3, "write_png: 1 or 3 channels only");
    std::ofstream f(path, std::ios::binary);
    if (!f) fail("write_png: cannot open " + path);
    static const unsigned char sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    f.write(reinterpret_cast<const char*>(sig), 8);

    std::vector<unsigned char> ihdr;
    detail::png_be32(ihdr, static_cast<std::uint32_t>(img.width));
    detail::png_be32(ihdr, static_cast<std::uint32_t>(img.height));
    ihdr.push_back(8);                                   // bit depth
    ihdr.push_back(img.channels == 3 ? 2 : 0);           // color type
    ihdr.push_back(0);                                   // compression
    ihdr.push_back(0);                                   // filter
    ihdr.push_back(0);                                   // interlace
    detail::png_chunk(f, "IHDR", ihdr);

    // raw scanlines, filter byte 0 per row
    std::vector<unsigned char> raw;
    raw.reserve(static_cast<std::size_t>(img.height) *
                (1 + static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.channels)));
    for (int y = 0; y < img.height; ++y) {
        raw.push_back(0);
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                raw.push_back(static_cast<unsigned char>(clamp01(img.at(x, y, c)) * 255.0 + 0.5));
    }
    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<unsigned char> idat(bound);
    require(compress2(idat.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) == Z_OK,
            "write_png: deflate failed");
    idat.resize(bound);
    detail::png_chunk(f, "IDAT", idat);
    detail::png_chunk(f, "IEND", {});
    if (!f) fail("write_png: write failed for " + path);
}

// Display remap for normal images: n * 0.5 + 0.5.
inline Image remap_normal_for_display(const Image& normal) {
    Image out = normal;
    for (double& v : out.data) v = v * 0.5 + 0.5;
    return out;
}

}  // namespace repose
