#pragma once

// Shared test fixtures: tiny on-disk image writers and a self-cleaning
// temporary directory. Tests create their own inputs so nothing in the
// repository has to ship binary files.

#include <gbc/gbc.hpp>

#include <png.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace testutil {

namespace fs = std::filesystem;

class TempDir {
public:
    TempDir() {
        const fs::path base = fs::temp_directory_path();
        std::random_device rd;
        for (int attempt = 0; attempt < 64; ++attempt) {
            fs::path candidate = base / ("gbc-test-" + std::to_string(rd()));
            std::error_code ec;
            if (fs::create_directory(candidate, ec) && !ec) {
                path_ = candidate;
                return;
            }
        }
        throw std::runtime_error("could not create a temp directory");
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path file(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

inline void write_bytes(const fs::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open " + p.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline void write_pgm(const fs::path& p, int w, int h, const std::vector<unsigned char>& pix,
                      int maxval = 255) {
    std::string bytes = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n" +
                        std::to_string(maxval) + "\n";
    bytes.append(pix.begin(), pix.end());
    write_bytes(p, bytes);
}

// 16-bit PGM: samples are two bytes each, most significant byte first.
inline void write_pgm16(const fs::path& p, int w, int h, const std::vector<unsigned>& pix,
                        int maxval = 65535) {
    std::string bytes = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n" +
                        std::to_string(maxval) + "\n";
    for (unsigned v : pix) {
        bytes.push_back(static_cast<char>((v >> 8) & 0xFF));
        bytes.push_back(static_cast<char>(v & 0xFF));
    }
    write_bytes(p, bytes);
}

inline void write_ppm(const fs::path& p, int w, int h, const std::vector<unsigned char>& rgb) {
    std::string bytes = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    bytes.append(rgb.begin(), rgb.end());
    write_bytes(p, bytes);
}

inline void write_png_impl(const fs::path& p, int w, int h, int color_type, int channels,
                           const std::vector<unsigned char>& pix) {
    if (pix.size() != static_cast<std::size_t>(w) * h * channels)
        throw std::runtime_error("write_png: pixel buffer size mismatch");
    FILE* fp = std::fopen(p.string().c_str(), "wb");
    if (!fp)
        throw std::runtime_error("cannot open " + p.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw std::runtime_error("png write failed for " + p.string());
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
                 color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(static_cast<std::size_t>(h));
    for (int y = 0; y < h; ++y)
        rows[static_cast<std::size_t>(y)] = const_cast<png_bytep>(
            pix.data() + static_cast<std::size_t>(y) * w * channels);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

inline void write_png_gray(const fs::path& p, int w, int h,
                           const std::vector<unsigned char>& pix) {
    write_png_impl(p, w, h, PNG_COLOR_TYPE_GRAY, 1, pix);
}

inline void write_png_rgb(const fs::path& p, int w, int h, const std::vector<unsigned char>& rgb) {
    write_png_impl(p, w, h, PNG_COLOR_TYPE_RGB, 3, rgb);
}

inline gbc::GrayImage random_image(std::mt19937& rng, int w, int h) {
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    gbc::GrayImage img(w, h);
    for (double& v : img.values)
        v = dist(rng);
    return img;
}

inline gbc::BitVector random_bits(std::mt19937& rng, std::size_t n) {
    std::bernoulli_distribution coin(0.5);
    gbc::BitVector bits;
    for (std::size_t i = 0; i < n; ++i)
        bits.push_back(coin(rng));
    return bits;
}

} // namespace testutil
