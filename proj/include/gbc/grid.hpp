#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace gbc {

// Row-major 2-D grid. x indexes columns, y indexes rows.
template <typename T>
struct Grid {
    int width = 0;
    int height = 0;
    std::vector<T> values;

    Grid() = default;
    Grid(int w, int h, T fill = T{})
        : width(w), height(h), values(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {
        if (w <= 0 || h <= 0)
            throw std::invalid_argument("Grid: dimensions must be positive");
    }

    T& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
    const T& at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }

    std::size_t pixel_count() const { return values.size(); }

    bool operator==(const Grid&) const = default;
};

// Intensity image, values in [0,1].
using GrayImage = Grid<double>;

// Complex filter response, same size as the filtered image.
using ResponseMap = Grid<std::complex<double>>;

// Real-valued map (e.g. magnitude of a ResponseMap).
using RealMap = Grid<double>;

inline void validate_gray(const GrayImage& img) {
    if (img.width <= 0 || img.height <= 0)
        throw std::invalid_argument("GrayImage: empty image");
    if (img.values.size() != static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height))
        throw std::invalid_argument("GrayImage: pixel count does not match dimensions");
    for (double v : img.values) {
        if (!std::isfinite(v) || v < 0.0 || v > 1.0)
            throw std::invalid_argument("GrayImage: intensity out of [0,1]");
    }
}

} // namespace gbc
