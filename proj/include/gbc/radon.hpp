#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "gbc/grid.hpp"

namespace gbc {

struct RadonConfig {
    int n_angles = 4;
    int bins = 128; // samples per projection after resampling
};

inline void validate_radon(const RadonConfig& cfg) {
    if (cfg.n_angles < 1 || cfg.bins < 1)
        throw std::invalid_argument("RadonConfig: n_angles and bins must be >= 1");
}

// One discrete projection: every pixel's mass is accumulated into the nearest
// 1-pixel-wide bin along rho = x cos(theta) + y sin(theta), coordinates taken
// relative to the image center. The number of bins depends on the angle; the
// projection sum always equals the total pixel mass.
inline std::vector<double> radon_projection_raw(const GrayImage& image, double theta) {
    if (image.width <= 0 || image.height <= 0)
        throw std::invalid_argument("radon_projection_raw: empty image");
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const double cx = (image.width - 1) / 2.0;
    const double cy = (image.height - 1) / 2.0;
    const double rho_max = std::abs(c) * cx + std::abs(s) * cy;
    const int n_raw = static_cast<int>(std::floor(2.0 * rho_max)) + 1;

    std::vector<double> proj(static_cast<std::size_t>(n_raw), 0.0);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            const double rho = (x - cx) * c + (y - cy) * s;
            int bin = static_cast<int>(std::floor(rho + rho_max + 0.5));
            bin = std::min(std::max(bin, 0), n_raw - 1);
            proj[static_cast<std::size_t>(bin)] += image.at(x, y);
        }
    }
    return proj;
}

namespace detail {

// Resample to `bins` samples by splitting each input bin's mass linearly
// between the two nearest output positions. Keeps the vector sum unchanged.
inline std::vector<double> resample_mass(const std::vector<double>& raw, int bins) {
    std::vector<double> out(static_cast<std::size_t>(bins), 0.0);
    const std::size_t n = raw.size();
    for (std::size_t k = 0; k < n; ++k) {
        const double pos = n == 1 ? (bins - 1) / 2.0
                                  : static_cast<double>(k) * (bins - 1) / static_cast<double>(n - 1);
        const auto i0 = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(i0);
        if (i0 + 1 >= static_cast<std::size_t>(bins)) {
            out[bins - 1] += raw[k];
        } else {
            out[i0] += (1.0 - frac) * raw[k];
            out[i0 + 1] += frac * raw[k];
        }
    }
    return out;
}

} // namespace detail

// Projections at n_angles equispaced angles in [0, pi), each resampled to
// exactly cfg.bins samples.
inline std::vector<std::vector<double>> radon_projections(const GrayImage& image, const RadonConfig& cfg) {
    validate_radon(cfg);
    validate_gray(image);
    std::vector<std::vector<double>> projections;
    projections.reserve(static_cast<std::size_t>(cfg.n_angles));
    for (int k = 0; k < cfg.n_angles; ++k) {
        const double theta = k * std::numbers::pi / cfg.n_angles;
        projections.push_back(detail::resample_mass(radon_projection_raw(image, theta), cfg.bins));
    }
    return projections;
}

} // namespace gbc
