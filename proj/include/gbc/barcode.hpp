#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gbc/gabor.hpp"
#include "gbc/grid.hpp"
#include "gbc/radon.hpp"

namespace gbc {

// Bit string packed 64 bits per word, LSB-first within each word.
// The unused tail of the last word is kept zero so XOR/popcount can run
// word-wise without masking.
class BitVector {
public:
    BitVector() = default;
    explicit BitVector(std::size_t bit_count)
        : size_(bit_count), words_((bit_count + 63) / 64, 0) {}

    void push_back(bool bit) {
        if (size_ % 64 == 0)
            words_.push_back(0);
        if (bit)
            words_.back() |= std::uint64_t{1} << (size_ % 64);
        ++size_;
    }

    bool operator[](std::size_t i) const {
        return (words_[i / 64] >> (i % 64)) & 1;
    }

    void set(std::size_t i, bool bit) {
        const std::uint64_t mask = std::uint64_t{1} << (i % 64);
        if (bit)
            words_[i / 64] |= mask;
        else
            words_[i / 64] &= ~mask;
    }

    void append(const BitVector& other) {
        for (std::size_t i = 0; i < other.size_; ++i)
            push_back(other[i]);
    }

    std::size_t size() const { return size_; }
    bool empty() const { return size_ == 0; }
    const std::vector<std::uint64_t>& words() const { return words_; }

    // Reconstruct from packed words; tail bits beyond bit_count are cleared.
    static BitVector from_words(std::vector<std::uint64_t> words, std::size_t bit_count) {
        if (words.size() != (bit_count + 63) / 64)
            throw std::invalid_argument("BitVector: word count does not match bit count");
        BitVector v;
        v.words_ = std::move(words);
        v.size_ = bit_count;
        if (bit_count % 64 != 0 && !v.words_.empty())
            v.words_.back() &= (std::uint64_t{1} << (bit_count % 64)) - 1;
        return v;
    }

    static std::size_t hamming_distance(const BitVector& a, const BitVector& b) {
        if (a.size_ != b.size_)
            throw std::invalid_argument("hamming_distance: length mismatch");
        std::size_t d = 0;
        for (std::size_t i = 0; i < a.words_.size(); ++i)
            d += static_cast<std::size_t>(std::popcount(a.words_[i] ^ b.words_[i]));
        return d;
    }

    std::string to_string() const {
        std::string s(size_, '0');
        for (std::size_t i = 0; i < size_; ++i)
            if ((*this)[i])
                s[i] = '1';
        return s;
    }

    static BitVector from_string(std::string_view s) {
        BitVector v;
        for (char c : s) {
            if (c != '0' && c != '1')
                throw std::invalid_argument("BitVector: expected '0'/'1' characters");
            v.push_back(c == '1');
        }
        return v;
    }

    bool operator==(const BitVector&) const = default;

private:
    std::size_t size_ = 0;
    std::vector<std::uint64_t> words_;
};

enum class BarcodeKind { GBC, RBC };

struct Barcode {
    BitVector bits;
    BarcodeKind kind = BarcodeKind::GBC;
    std::string config_tag;

    std::size_t length() const { return bits.size(); }
};

// Debug/CLI text form: "GBC(5,8,23,23):0110..."
inline std::string to_text(const Barcode& b) {
    return b.config_tag + ":" + b.bits.to_string();
}

struct DownsampleSpec {
    int d1 = 4; // column factor
    int d2 = 4; // row factor
};

enum class DownsampleMode {
    decimate,  // keep every d-th sample
    block_mean // average each d2 x d1 block (experimental alternative)
};

// Reduce a response map to a flat feature vector of length
// (rows/d2) * (cols/d1), row-major.
inline std::vector<double> downsample(const RealMap& map, const DownsampleSpec& spec,
                                      DownsampleMode mode = DownsampleMode::decimate) {
    if (spec.d1 < 1 || spec.d2 < 1)
        throw std::invalid_argument("downsample: factors must be >= 1");
    if (map.width % spec.d1 != 0 || map.height % spec.d2 != 0)
        throw std::invalid_argument("downsample: map dimensions not divisible by factors");

    const int out_rows = map.height / spec.d2;
    const int out_cols = map.width / spec.d1;
    std::vector<double> vec;
    vec.reserve(static_cast<std::size_t>(out_rows) * out_cols);
    for (int r = 0; r < out_rows; ++r) {
        for (int c = 0; c < out_cols; ++c) {
            if (mode == DownsampleMode::decimate) {
                vec.push_back(map.at(c * spec.d1, r * spec.d2));
            } else {
                double sum = 0.0;
                for (int dy = 0; dy < spec.d2; ++dy)
                    for (int dx = 0; dx < spec.d1; ++dx)
                        sum += map.at(c * spec.d1 + dx, r * spec.d2 + dy);
                vec.push_back(sum / (spec.d1 * spec.d2));
            }
        }
    }
    return vec;
}

namespace detail {

// Median as the mean of the two middle order statistics for even lengths.
inline double median_of(std::vector<double> v) {
    const std::size_t n = v.size();
    std::sort(v.begin(), v.end());
    if (n % 2 == 1)
        return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace detail

// bit_i = 1 iff vec_i >= median(vec). Constant vectors therefore give all ones.
inline BitVector binarize_median(const std::vector<double>& vec) {
    if (vec.empty())
        throw std::invalid_argument("binarize_median: empty vector");
    for (double v : vec)
        if (!std::isfinite(v))
            throw std::invalid_argument("binarize_median: non-finite value");
    const double med = detail::median_of(vec);
    BitVector bits;
    for (double v : vec)
        bits.push_back(v >= med);
    return bits;
}

inline std::string gbc_config_tag(const GaborBankConfig& cfg) {
    return "GBC(" + std::to_string(cfg.scales) + "," + std::to_string(cfg.orientations) + "," +
           std::to_string(cfg.window_rows) + "," + std::to_string(cfg.window_cols) + ")";
}

inline std::string rbc_config_tag(const RadonConfig& cfg) {
    return "RBC(" + std::to_string(cfg.n_angles) + "," + std::to_string(cfg.bins) + ")";
}

// Gabor barcode: for every kernel in bank order, take the magnitude response,
// downsample it, threshold at the feature vector's median and append the bits.
// The image is expected to be normalized to the target square size already.
inline Barcode make_gbc(const GrayImage& image, const GaborBankConfig& cfg, const DownsampleSpec& spec,
                        DownsampleMode mode = DownsampleMode::decimate) {
    validate_gray(image);
    Barcode code;
    code.kind = BarcodeKind::GBC;
    code.config_tag = gbc_config_tag(cfg);
    for (const GaborKernel& kernel : make_bank(cfg)) {
        const RealMap mag = magnitude(convolve(image, kernel));
        code.bits.append(binarize_median(downsample(mag, spec, mode)));
    }
    return code;
}

// Threshold a projection at the median of its non-zero entries; an all-zero
// projection yields an all-zero fragment.
inline BitVector binarize_nonzero_median(const std::vector<double>& proj) {
    std::vector<double> nonzero;
    for (double v : proj)
        if (v != 0.0)
            nonzero.push_back(v);
    BitVector bits;
    if (nonzero.empty()) {
        for (std::size_t i = 0; i < proj.size(); ++i)
            bits.push_back(false);
        return bits;
    }
    const double med = detail::median_of(std::move(nonzero));
    for (double v : proj)
        bits.push_back(v >= med);
    return bits;
}

// Radon barcode: concatenation of the thresholded projections in angle order.
inline Barcode make_rbc(const GrayImage& image, const RadonConfig& cfg) {
    validate_radon(cfg);
    Barcode code;
    code.kind = BarcodeKind::RBC;
    code.config_tag = rbc_config_tag(cfg);
    for (const std::vector<double>& proj : radon_projections(image, cfg))
        code.bits.append(binarize_nonzero_median(proj));
    return code;
}

} // namespace gbc
