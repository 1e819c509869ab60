#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "gbc/errors.hpp"

namespace gbc {

// One dataset row: "image_id,path[,irma_code]". irma_code stays empty for
// unlabeled rows. Fields must not contain commas.
struct ManifestRow {
    std::string image_id;
    std::string path;
    std::string irma_code;
};

inline std::vector<ManifestRow> read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw io_error("cannot open manifest: " + path.string());
    std::vector<ManifestRow> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line[0] == '#')
            continue;
        const std::size_t c1 = line.find(',');
        if (c1 == std::string::npos)
            throw format_error(path.string() + ":" + std::to_string(lineno) +
                               ": expected image_id,path[,irma_code]");
        const std::size_t c2 = line.find(',', c1 + 1);
        ManifestRow row;
        row.image_id = line.substr(0, c1);
        if (c2 == std::string::npos) {
            row.path = line.substr(c1 + 1);
        } else {
            if (line.find(',', c2 + 1) != std::string::npos)
                throw format_error(path.string() + ":" + std::to_string(lineno) + ": too many fields");
            row.path = line.substr(c1 + 1, c2 - c1 - 1);
            row.irma_code = line.substr(c2 + 1);
        }
        if (row.image_id.empty() || row.path.empty())
            throw format_error(path.string() + ":" + std::to_string(lineno) + ": empty image_id or path");
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace gbc
