#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <png.h>

#include "gbc/errors.hpp"
#include "gbc/grid.hpp"

namespace gbc {

namespace detail {

inline std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw io_error("cannot open file: " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad())
        throw io_error("read failed: " + path.string());
    return bytes;
}

// Netpbm header token reader: skips whitespace and '#' comment lines.
class PnmCursor {
public:
    PnmCursor(const unsigned char* data, std::size_t size) : data_(data), size_(size) {}

    unsigned long next_uint() {
        skip_space_and_comments();
        if (pos_ >= size_ || !std::isdigit(data_[pos_]))
            throw format_error("PNM: malformed header");
        unsigned long v = 0;
        while (pos_ < size_ && std::isdigit(data_[pos_])) {
            v = v * 10 + (data_[pos_] - '0');
            if (v > 1000000000UL)
                throw format_error("PNM: header value out of range");
            ++pos_;
        }
        return v;
    }

    // One whitespace byte separates the maxval from the raster.
    const unsigned char* raster(std::size_t needed) {
        if (pos_ >= size_ || !std::isspace(data_[pos_]))
            throw format_error("PNM: missing raster separator");
        ++pos_;
        if (size_ - pos_ < needed)
            throw format_error("PNM: truncated raster data");
        return data_ + pos_;
    }

private:
    void skip_space_and_comments() {
        while (pos_ < size_) {
            if (std::isspace(data_[pos_])) {
                ++pos_;
            } else if (data_[pos_] == '#') {
                while (pos_ < size_ && data_[pos_] != '\n')
                    ++pos_;
            } else {
                break;
            }
        }
    }

    const unsigned char* data_;
    std::size_t size_;
    std::size_t pos_ = 2; // past the magic
};

inline double luma(double r, double g, double b) {
    return 0.299 * r + 0.587 * g + 0.114 * b;
}

inline GrayImage decode_pnm(const std::vector<unsigned char>& bytes, int channels) {
    PnmCursor cur(bytes.data(), bytes.size());
    const unsigned long width = cur.next_uint();
    const unsigned long height = cur.next_uint();
    const unsigned long maxval = cur.next_uint();
    if (width == 0 || height == 0)
        throw format_error("PNM: zero-dimension image");
    if (maxval == 0 || maxval > 65535)
        throw format_error("PNM: unsupported maxval");
    const int bytes_per_sample = maxval > 255 ? 2 : 1;
    const std::size_t n_samples = static_cast<std::size_t>(width) * height * channels;
    const unsigned char* p = cur.raster(n_samples * bytes_per_sample);

    GrayImage img(static_cast<int>(width), static_cast<int>(height));
    const double scale = 1.0 / static_cast<double>(maxval);
    auto sample = [&](std::size_t i) -> double {
        if (bytes_per_sample == 1)
            return p[i] * scale;
        return ((p[2 * i] << 8) | p[2 * i + 1]) * scale; // MSB first
    };
    for (std::size_t i = 0; i < static_cast<std::size_t>(width) * height; ++i) {
        if (channels == 1)
            img.values[i] = sample(i);
        else
            img.values[i] = luma(sample(3 * i), sample(3 * i + 1), sample(3 * i + 2));
    }
    return img;
}

struct PngMemReader {
    const unsigned char* data;
    std::size_t size;
    std::size_t pos;
};

inline void png_mem_read(png_structp png, png_bytep out, png_size_t n) {
    auto* r = static_cast<PngMemReader*>(png_get_io_ptr(png));
    if (n > r->size - r->pos)
        png_error(png, "unexpected end of stream");
    std::memcpy(out, r->data + r->pos, n);
    r->pos += n;
}

inline void png_throwing_error(png_structp png, png_const_charp msg) {
    // Recorded message is rethrown after libpng state is torn down.
    *static_cast<std::string*>(png_get_error_ptr(png)) = msg;
    longjmp(png_jmpbuf(png), 1);
}

inline void png_quiet_warning(png_structp, png_const_charp) {}

inline GrayImage decode_png(const std::vector<unsigned char>& bytes) {
    std::string errmsg;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &errmsg, png_throwing_error, png_quiet_warning);
    if (!png)
        throw format_error("PNG: failed to initialize decoder");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw format_error("PNG: failed to initialize decoder");
    }

    std::vector<png_byte> raster;
    std::vector<png_bytep> rows;
    PngMemReader reader{bytes.data(), bytes.size(), 0};
    png_uint_32 width = 0, height = 0;
    int bit_depth = 0, channels = 0;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw format_error("PNG: " + (errmsg.empty() ? std::string("decode failed") : errmsg));
    }

    png_set_read_fn(png, &reader, png_mem_read);
    png_read_info(png, info);
    width = png_get_image_width(png, info);
    height = png_get_image_height(png, info);
    if (width == 0 || height == 0) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw format_error("PNG: zero-dimension image");
    }

    // Normalize every color type to 8/16-bit gray or RGB samples.
    const int color_type = png_get_color_type(png, info);
    if (color_type == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS))
        png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    bit_depth = png_get_bit_depth(png, info);
    channels = png_get_channels(png, info);
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    raster.resize(rowbytes * height);
    rows.resize(height);
    for (png_uint_32 y = 0; y < height; ++y)
        rows[y] = raster.data() + y * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    if (channels != 1 && channels != 3)
        throw format_error("PNG: unsupported channel layout");

    GrayImage img(static_cast<int>(width), static_cast<int>(height));
    const double scale = bit_depth == 16 ? 1.0 / 65535.0 : 1.0 / 255.0;
    for (png_uint_32 y = 0; y < height; ++y) {
        const png_byte* row = raster.data() + y * rowbytes;
        for (png_uint_32 x = 0; x < width; ++x) {
            auto sample = [&](int c) -> double {
                const std::size_t i = (static_cast<std::size_t>(x) * channels + c);
                if (bit_depth == 16)
                    return ((row[2 * i] << 8) | row[2 * i + 1]) * scale;
                return row[i] * scale;
            };
            img.at(static_cast<int>(x), static_cast<int>(y)) =
                channels == 1 ? sample(0) : luma(sample(0), sample(1), sample(2));
        }
    }
    return img;
}

} // namespace detail

// Reads a PGM (binary P5), PPM (binary P6) or PNG file into a GrayImage.
// Color samples collapse to gray via 0.299 R + 0.587 G + 0.114 B.
inline GrayImage load_image(const std::filesystem::path& path) {
    const std::vector<unsigned char> bytes = detail::read_file_bytes(path);
    if (bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0)
        return detail::decode_png(bytes);
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5')
        return detail::decode_pnm(bytes, 1);
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6')
        return detail::decode_pnm(bytes, 3);
    throw format_error("unsupported image format: " + path.string());
}

// Bilinear resize to a square 2^n x 2^n target. Identity when already at size.
inline GrayImage normalize(const GrayImage& image, int target_rows, int target_cols) {
    validate_gray(image);
    if (target_rows != target_cols)
        throw std::invalid_argument("normalize: target must be square");
    const auto side = static_cast<unsigned>(target_rows);
    if (target_rows < 2 || !std::has_single_bit(side))
        throw std::invalid_argument("normalize: target side must be a power of two >= 2");
    if (image.width == target_cols && image.height == target_rows)
        return image;

    GrayImage out(target_cols, target_rows);
    const double sx = static_cast<double>(image.width) / target_cols;
    const double sy = static_cast<double>(image.height) / target_rows;
    for (int y = 0; y < target_rows; ++y) {
        // Half-pixel centers keep the resampling symmetric.
        const double src_y = (y + 0.5) * sy - 0.5;
        const int y0 = static_cast<int>(std::floor(src_y));
        const double fy = src_y - y0;
        const int ya = std::clamp(y0, 0, image.height - 1);
        const int yb = std::clamp(y0 + 1, 0, image.height - 1);
        for (int x = 0; x < target_cols; ++x) {
            const double src_x = (x + 0.5) * sx - 0.5;
            const int x0 = static_cast<int>(std::floor(src_x));
            const double fx = src_x - x0;
            const int xa = std::clamp(x0, 0, image.width - 1);
            const int xb = std::clamp(x0 + 1, 0, image.width - 1);
            const double top = (1.0 - fx) * image.at(xa, ya) + fx * image.at(xb, ya);
            const double bot = (1.0 - fx) * image.at(xa, yb) + fx * image.at(xb, yb);
            out.at(x, y) = std::clamp((1.0 - fy) * top + fy * bot, 0.0, 1.0);
        }
    }
    return out;
}

} // namespace gbc
