#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "gbc/grid.hpp"

namespace gbc {

// Parameters of a single complex Gabor window.
struct GaborParams {
    double frequency = 0.25; // modulation frequency, cycles/pixel
    double theta = 0.0;      // orientation, radians
    double phi = 0.0;        // phase offset, radians
    double sigma = 2.24;     // Gaussian envelope std, pixels
    double gamma = 1.0;      // spatial aspect ratio of the envelope
    double eta_aspect = 1.0; // aspect parameter in the amplitude normalization
    int window_rows = 23;    // odd, so the window has an exact center
    int window_cols = 23;    // odd
};

struct GaborKernel {
    int rows = 0;
    int cols = 0;
    std::vector<std::complex<double>> values; // row-major, window centered at (0,0)

    int center_x() const { return (cols - 1) / 2; }
    int center_y() const { return (rows - 1) / 2; }

    // x in [-(cols-1)/2, (cols-1)/2], y in [-(rows-1)/2, (rows-1)/2]
    std::complex<double> at_offset(int x, int y) const {
        return values[static_cast<std::size_t>(y + center_y()) * cols + (x + center_x())];
    }
};

// Filter bank layout: scales * orientations kernels sharing window and shape
// parameters. Frequencies follow a half-octave ladder down from f_max and the
// envelope width tracks frequency through a fixed sigma*f product.
struct GaborBankConfig {
    int scales = 5;        // u
    int orientations = 8;  // v
    int window_rows = 23;  // s
    int window_cols = 23;  // t
    double f_max = 0.25;   // frequency of the finest scale, cycles/pixel
    double gamma = 1.0;
    double eta_aspect = 1.0;
    double phi = 0.0;
    double sigma_f = 0.56; // sigma is derived per scale as sigma_f / frequency

    int size() const { return scales * orientations; }
};

inline void validate_params(const GaborParams& p) {
    if (!(p.frequency > 0.0) || !(p.sigma > 0.0) || !(p.gamma > 0.0) || !(p.eta_aspect > 0.0))
        throw std::invalid_argument("GaborParams: frequency, sigma, gamma and eta_aspect must be positive");
    if (p.window_rows < 1 || p.window_cols < 1 || p.window_rows % 2 == 0 || p.window_cols % 2 == 0)
        throw std::invalid_argument("GaborParams: window sides must be odd and positive");
}

// Sample the complex Gabor window on integer offsets:
//   G(x,y) = f^2/(pi*gamma*eta) * exp(-(x'^2 + gamma*y'^2)/(2 sigma^2)) * exp(j(2 pi f x' + phi))
// with x' = x cos(theta) + y sin(theta), y' = -x sin(theta) + y cos(theta).
inline GaborKernel make_kernel(const GaborParams& p) {
    validate_params(p);
    GaborKernel k;
    k.rows = p.window_rows;
    k.cols = p.window_cols;
    k.values.resize(static_cast<std::size_t>(k.rows) * k.cols);

    const double norm = p.frequency * p.frequency / (std::numbers::pi * p.gamma * p.eta_aspect);
    const double cos_t = std::cos(p.theta);
    const double sin_t = std::sin(p.theta);
    const double inv_two_sigma2 = 1.0 / (2.0 * p.sigma * p.sigma);
    const int cx = k.center_x();
    const int cy = k.center_y();

    std::size_t i = 0;
    for (int y = -cy; y <= cy; ++y) {
        for (int x = -cx; x <= cx; ++x, ++i) {
            const double xr = x * cos_t + y * sin_t;
            const double yr = -x * sin_t + y * cos_t;
            const double envelope = std::exp(-(xr * xr + p.gamma * yr * yr) * inv_two_sigma2);
            const double phase = 2.0 * std::numbers::pi * p.frequency * xr + p.phi;
            k.values[i] = std::polar(norm * envelope, phase);
        }
    }
    return k;
}

inline void validate_bank(const GaborBankConfig& cfg) {
    if (cfg.scales < 1 || cfg.orientations < 1)
        throw std::invalid_argument("GaborBankConfig: need at least one scale and one orientation");
    if (!(cfg.f_max > 0.0) || !(cfg.sigma_f > 0.0))
        throw std::invalid_argument("GaborBankConfig: f_max and sigma_f must be positive");
}

// Kernel parameters in bank order: index = scale * orientations + orientation.
inline std::vector<GaborParams> bank_params(const GaborBankConfig& cfg) {
    validate_bank(cfg);
    std::vector<GaborParams> params;
    params.reserve(static_cast<std::size_t>(cfg.size()));
    for (int a = 0; a < cfg.scales; ++a) {
        const double f = cfg.f_max / std::pow(std::numbers::sqrt2, a);
        for (int b = 0; b < cfg.orientations; ++b) {
            GaborParams p;
            p.frequency = f;
            p.theta = b * std::numbers::pi / cfg.orientations;
            p.phi = cfg.phi;
            p.sigma = cfg.sigma_f / f;
            p.gamma = cfg.gamma;
            p.eta_aspect = cfg.eta_aspect;
            p.window_rows = cfg.window_rows;
            p.window_cols = cfg.window_cols;
            params.push_back(p);
        }
    }
    return params;
}

inline std::vector<GaborKernel> make_bank(const GaborBankConfig& cfg) {
    std::vector<GaborKernel> bank;
    for (const GaborParams& p : bank_params(cfg))
        bank.push_back(make_kernel(p));
    return bank;
}

// Zero-padded "same" convolution: out(x,y) = sum_kx sum_ky I(x-kx, y-ky) * G(kx, ky).
inline ResponseMap convolve(const GrayImage& image, const GaborKernel& kernel) {
    if (image.width <= 0 || image.height <= 0)
        throw std::invalid_argument("convolve: empty image");
    if (kernel.rows > 2 * image.height || kernel.cols > 2 * image.width)
        throw std::invalid_argument("convolve: kernel more than twice the image size");

    const int w = image.width;
    const int h = image.height;
    const int cx = kernel.center_x();
    const int cy = kernel.center_y();

    // Planar kernel copies keep the inner loop to two multiply-adds per tap.
    std::vector<double> kre(kernel.values.size()), kim(kernel.values.size());
    for (std::size_t i = 0; i < kernel.values.size(); ++i) {
        kre[i] = kernel.values[i].real();
        kim[i] = kernel.values[i].imag();
    }

    ResponseMap out(w, h);
    for (int y = 0; y < h; ++y) {
        // image row index y-ky must stay in [0, h): ky in [y-h+1, y]
        const int ky_lo = std::max(-cy, y - h + 1);
        const int ky_hi = std::min(cy, y);
        for (int x = 0; x < w; ++x) {
            const int kx_lo = std::max(-cx, x - w + 1);
            const int kx_hi = std::min(cx, x);
            double acc_re = 0.0, acc_im = 0.0;
            for (int ky = ky_lo; ky <= ky_hi; ++ky) {
                const double* irow = &image.values[static_cast<std::size_t>(y - ky) * w];
                const std::size_t krow = static_cast<std::size_t>(ky + cy) * kernel.cols + cx;
                for (int kx = kx_lo; kx <= kx_hi; ++kx) {
                    const double pix = irow[x - kx];
                    acc_re += pix * kre[krow + kx];
                    acc_im += pix * kim[krow + kx];
                }
            }
            out.at(x, y) = {acc_re, acc_im};
        }
    }
    return out;
}

// Elementwise complex modulus.
inline RealMap magnitude(const ResponseMap& response) {
    RealMap out(response.width, response.height);
    for (std::size_t i = 0; i < response.values.size(); ++i)
        out.values[i] = std::abs(response.values[i]);
    return out;
}

} // namespace gbc
