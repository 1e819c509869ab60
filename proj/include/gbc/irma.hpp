#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gbc/errors.hpp"

namespace gbc {

// Four-axis hierarchical label TTTT-DDD-AAA-BBB: technical (modality),
// directional, anatomical and biological axis.
struct IrmaCode {
    std::array<std::string, 4> axes;

    std::string to_string() const {
        return axes[0] + "-" + axes[1] + "-" + axes[2] + "-" + axes[3];
    }

    bool operator==(const IrmaCode&) const = default;
};

inline constexpr std::array<int, 4> irma_axis_lengths{4, 3, 3, 3};

inline IrmaCode parse_irma(std::string_view text) {
    IrmaCode code;
    std::size_t start = 0;
    int axis = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || text[i] == '-') {
            if (axis >= 4)
                throw format_error("IRMA code: expected 4 hyphen-separated axes");
            code.axes[axis++] = std::string(text.substr(start, i - start));
            start = i + 1;
        }
    }
    if (axis != 4)
        throw format_error("IRMA code: expected 4 hyphen-separated axes");
    for (int j = 0; j < 4; ++j) {
        if (code.axes[j].size() != static_cast<std::size_t>(irma_axis_lengths[j]))
            throw format_error("IRMA code: axis " + std::to_string(j + 1) + " has wrong length");
        for (char c : code.axes[j])
            if (!std::isalnum(static_cast<unsigned char>(c)))
                throw format_error("IRMA code: non-alphanumeric character");
    }
    return code;
}

// Per-position branching factors b[axis][position] (number of possible
// characters at that position). Positions are stored 0-based.
struct BranchTable {
    std::array<std::vector<int>, 4> branches;

    static BranchTable uniform(int b) {
        if (b < 1)
            throw std::invalid_argument("BranchTable: branch factors must be >= 1");
        BranchTable t;
        for (int j = 0; j < 4; ++j)
            t.branches[j].assign(static_cast<std::size_t>(irma_axis_lengths[j]), b);
        return t;
    }
};

inline void validate_branch_table(const BranchTable& t) {
    for (int j = 0; j < 4; ++j) {
        if (t.branches[j].size() != static_cast<std::size_t>(irma_axis_lengths[j]))
            throw std::invalid_argument("BranchTable: wrong position count on axis " + std::to_string(j + 1));
        for (int b : t.branches[j])
            if (b < 1)
                throw std::invalid_argument("BranchTable: branch factors must be >= 1");
    }
}

// Prefix-sensitive mismatch indicator. axis in 1..4, pos in 1..l_axis.
// Returns 1 iff the codes disagree at any position h <= pos on that axis,
// so a mismatch early in an axis poisons everything after it.
inline int delta(const IrmaCode& query, const IrmaCode& retrieved, int axis, int pos) {
    if (axis < 1 || axis > 4)
        throw std::out_of_range("delta: axis out of range");
    if (pos < 1 || pos > irma_axis_lengths[axis - 1])
        throw std::out_of_range("delta: position out of range");
    for (int h = 0; h < pos; ++h)
        if (query.axes[axis - 1][h] != retrieved.axes[axis - 1][h])
            return 1;
    return 0;
}

// Error contribution of one axis:
//   sum_i 1/b[axis][i] * 1/i * delta(query, retrieved, axis, i)
inline double axis_error(const IrmaCode& query, const IrmaCode& retrieved, const BranchTable& table, int axis) {
    double err = 0.0;
    int first_mismatch = 0; // 0 = none; delta stays 1 from here on
    const std::string& q = query.axes[axis - 1];
    const std::string& r = retrieved.axes[axis - 1];
    for (int i = 1; i <= irma_axis_lengths[axis - 1]; ++i) {
        if (first_mismatch == 0 && q[i - 1] != r[i - 1])
            first_mismatch = i;
        if (first_mismatch != 0)
            err += 1.0 / table.branches[axis - 1][i - 1] / i;
    }
    return err;
}

inline std::array<double, 4> pair_error_by_axis(const IrmaCode& query, const IrmaCode& retrieved,
                                                const BranchTable& table) {
    validate_branch_table(table);
    std::array<double, 4> by_axis{};
    for (int j = 1; j <= 4; ++j)
        by_axis[j - 1] = axis_error(query, retrieved, table, j);
    return by_axis;
}

// Hierarchical error between one query label and the retrieved label.
inline double pair_error(const IrmaCode& query, const IrmaCode& retrieved, const BranchTable& table) {
    const auto by_axis = pair_error_by_axis(query, retrieved, table);
    return by_axis[0] + by_axis[1] + by_axis[2] + by_axis[3];
}

inline double total_error(const std::vector<std::pair<IrmaCode, IrmaCode>>& pairs, const BranchTable& table) {
    if (pairs.empty())
        throw std::invalid_argument("total_error: empty pair list");
    double sum = 0.0;
    for (const auto& [query, retrieved] : pairs)
        sum += pair_error(query, retrieved, table);
    return sum;
}

// Derive branch factors from a corpus: distinct characters observed at each
// position, floored at 1.
inline BranchTable build_branch_table(const std::vector<IrmaCode>& corpus) {
    if (corpus.empty())
        throw std::invalid_argument("build_branch_table: empty corpus");
    BranchTable t;
    for (int j = 0; j < 4; ++j) {
        t.branches[j].resize(static_cast<std::size_t>(irma_axis_lengths[j]));
        for (int i = 0; i < irma_axis_lengths[j]; ++i) {
            std::set<char> chars;
            for (const IrmaCode& code : corpus)
                chars.insert(code.axes[j][i]);
            t.branches[j][i] = std::max<int>(1, static_cast<int>(chars.size()));
        }
    }
    return t;
}

// Suitability of a method: (E_max * L_max) / (E_total * L_code).
// Larger is better; rewards low error and short codes simultaneously.
inline double eta_suitability(double e_total, double l_code, double e_max, double l_max) {
    if (!(e_total > 0.0) || !(l_code > 0.0))
        throw std::invalid_argument("eta_suitability: zero denominator");
    return (e_max * l_max) / (e_total * l_code);
}

struct EvalRecord {
    std::string method_name;
    double e_total = 0.0;
    long l_code = 0;
    double eta = 0.0;
};

// Fill each record's eta using the maxima over the compared records.
inline void compute_eta(std::vector<EvalRecord>& records) {
    if (records.empty())
        return;
    double e_max = 0.0, l_max = 0.0;
    for (const EvalRecord& r : records) {
        e_max = std::max(e_max, r.e_total);
        l_max = std::max(l_max, static_cast<double>(r.l_code));
    }
    for (EvalRecord& r : records)
        r.eta = eta_suitability(r.e_total, static_cast<double>(r.l_code), e_max, l_max);
}

// Branch table text file: one line per axis, space-separated integers.
inline BranchTable load_branch_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw io_error("cannot open branch table: " + path.string());
    BranchTable t;
    std::string line;
    for (int j = 0; j < 4; ++j) {
        if (!std::getline(in, line))
            throw format_error("branch table: expected 4 lines");
        std::istringstream ss(line);
        int b;
        while (ss >> b)
            t.branches[j].push_back(b);
        if (!ss.eof())
            throw format_error("branch table: non-integer token on line " + std::to_string(j + 1));
    }
    try {
        validate_branch_table(t);
    } catch (const std::invalid_argument& e) {
        throw format_error(std::string("branch table: ") + e.what());
    }
    return t;
}

inline void save_branch_table(const BranchTable& t, const std::filesystem::path& path) {
    validate_branch_table(t);
    std::ofstream out(path);
    if (!out)
        throw io_error("cannot write branch table: " + path.string());
    for (int j = 0; j < 4; ++j) {
        for (std::size_t i = 0; i < t.branches[j].size(); ++i)
            out << (i ? " " : "") << t.branches[j][i];
        out << "\n";
    }
    if (!out)
        throw io_error("write failed: " + path.string());
}

// Labels manifest: CSV rows "image_id,irma_code".
inline std::vector<std::pair<std::string, IrmaCode>> read_labels_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw io_error("cannot open labels file: " + path.string());
    std::vector<std::pair<std::string, IrmaCode>> labels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line[0] == '#')
            continue;
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
            throw format_error(path.string() + ":" + std::to_string(lineno) + ": expected image_id,irma_code");
        labels.emplace_back(line.substr(0, comma), parse_irma(line.substr(comma + 1)));
    }
    return labels;
}

} // namespace gbc
