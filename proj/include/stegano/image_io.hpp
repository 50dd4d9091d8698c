// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>
#include <vector>

#include "stegano/error.hpp"
#include "stegano/image.hpp"

namespace stegano::io {

namespace detail {

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot create " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

inline void check_planes(const Planes& planes) {
    if (planes.empty()) throw DimensionError("image has no planes");
    for (const auto& p : planes) {
        if (p.width() != planes[0].width() || p.height() != planes[0].height()) {
            throw DimensionError("image planes differ in size");
        }
    }
}

inline std::vector<std::uint8_t> interleave(const Planes& planes) {
    check_planes(planes);
    const std::size_t n = planes[0].size();
    const std::size_t ch = planes.size();
    std::vector<std::uint8_t> out(n * ch);
    for (std::size_t c = 0; c < ch; ++c) {
        const auto px = planes[c].pixels();
        for (std::size_t i = 0; i < n; ++i) out[i * ch + c] = px[i];
    }
    return out;
}

inline Planes deinterleave(std::size_t width, std::size_t height, std::size_t channels,
                           const std::uint8_t* data) {
    Planes planes(channels, PixelGrid(width, height));
    for (std::size_t i = 0; i < width * height; ++i) {
        for (std::size_t c = 0; c < channels; ++c) planes[c].pixels()[i] = data[i * channels + c];
    }
    return planes;
}

struct NetpbmCursor {
    const std::vector<std::uint8_t>& bytes;
    std::size_t pos = 2;

    std::size_t next_number() {
        for (;;) {
            while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
            if (pos < bytes.size() && bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
                continue;
            }
            break;
        }
        if (pos >= bytes.size() || !std::isdigit(bytes[pos])) throw IoError("malformed netpbm header");
        std::size_t value = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            value = value * 10 + static_cast<std::size_t>(bytes[pos] - '0');
            if (value > (1u << 24)) throw IoError("netpbm header value too large");
            ++pos;
        }
        return value;
    }
};

}  // namespace detail

/// Decodes binary PGM (P5) or PPM (P6) with maxval 255.
inline Planes decode_netpbm(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
        throw IoError("not a binary PGM/PPM stream");
    }
    const std::size_t channels = bytes[1] == '5' ? 1 : 3;
    detail::NetpbmCursor cur{bytes};
    const std::size_t width = cur.next_number();
    const std::size_t height = cur.next_number();
    const std::size_t maxval = cur.next_number();
    if (maxval != 255) throw IoError("only 8-bit netpbm (maxval 255) is supported");
    if (cur.pos >= bytes.size() || !std::isspace(bytes[cur.pos])) throw IoError("malformed netpbm header");
    const std::size_t start = cur.pos + 1;
    const std::size_t need = width * height * channels;
    if (bytes.size() < start + need) throw IoError("truncated netpbm raster");
    return detail::deinterleave(width, height, channels, bytes.data() + start);
}

inline std::vector<std::uint8_t> encode_netpbm(const Planes& planes) {
    detail::check_planes(planes);
    if (planes.size() != 1 && planes.size() != 3) throw IoError("netpbm output needs 1 or 3 planes");
    const std::string header = std::string(planes.size() == 1 ? "P5\n" : "P6\n") +
                               std::to_string(planes[0].width()) + " " + std::to_string(planes[0].height()) +
                               "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    const auto body = detail::interleave(planes);
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

/// Decodes 8-bit grayscale or RGB PNG. Palettes, alpha and 16-bit depth are rejected.
inline Planes decode_png(const std::vector<std::uint8_t>& bytes) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
        throw IoError(std::string("PNG decode failed: ") + image.message);
    }
    const bool palette = (image.format & PNG_FORMAT_FLAG_COLORMAP) != 0;
    const bool alpha = (image.format & PNG_FORMAT_FLAG_ALPHA) != 0;
    const bool wide = (image.format & PNG_FORMAT_FLAG_LINEAR) != 0;
    if (palette || alpha || wide) {
        png_image_free(&image);
        throw IoError("unsupported PNG layout: only 8-bit grayscale or RGB without alpha");
    }
    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    const std::size_t channels = color ? 3 : 1;
    std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        png_image_free(&image);
        throw IoError(std::string("PNG decode failed: ") + image.message);
    }
    return detail::deinterleave(image.width, image.height, channels, buffer.data());
}

inline std::vector<std::uint8_t> encode_png(const Planes& planes) {
    detail::check_planes(planes);
    if (planes.size() != 1 && planes.size() != 3) throw IoError("PNG output needs 1 or 3 planes");
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(planes[0].width());
    image.height = static_cast<png_uint_32>(planes[0].height());
    image.format = planes.size() == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    const auto raster = detail::interleave(planes);
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, raster.data(), 0, nullptr)) {
        throw IoError(std::string("PNG encode failed: ") + image.message);
    }
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, raster.data(), 0, nullptr)) {
        throw IoError(std::string("PNG encode failed: ") + image.message);
    }
    out.resize(size);
    return out;
}

inline Planes read_image(const std::filesystem::path& path) {
    const auto bytes = detail::read_file(path);
    static constexpr std::uint8_t kPngMagic[] = {0x89, 'P', 'N', 'G'};
    if (bytes.size() >= 4 && std::equal(std::begin(kPngMagic), std::end(kPngMagic), bytes.begin())) {
        return decode_png(bytes);
    }
    return decode_netpbm(bytes);
}

/// Format follows the extension: .png, otherwise netpbm (.pgm/.ppm).
inline void write_image(const std::filesystem::path& path, const Planes& planes) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    detail::write_file(path, ext == ".png" ? encode_png(planes) : encode_netpbm(planes));
}

}  // namespace stegano::io
