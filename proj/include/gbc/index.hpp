#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "gbc/barcode.hpp"
#include "gbc/errors.hpp"
#include "gbc/irma.hpp"

namespace gbc {

namespace detail {

inline std::uint32_t crc32(const unsigned char* data, std::size_t n) {
    static const std::array<std::uint32_t, 256> table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k)
                c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t crc = 0xFFFFFFFFu;
    for (std::size_t i = 0; i < n; ++i)
        crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

struct ByteWriter {
    std::vector<unsigned char> bytes;

    void u16(std::uint16_t v) {
        bytes.push_back(v & 0xFF);
        bytes.push_back((v >> 8) & 0xFF);
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i)
            bytes.push_back((v >> (8 * i)) & 0xFF);
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i)
            bytes.push_back((v >> (8 * i)) & 0xFF);
    }
    void str16(const std::string& s) {
        if (s.size() > 0xFFFF)
            throw std::invalid_argument("index: string field longer than 65535 bytes");
        u16(static_cast<std::uint16_t>(s.size()));
        bytes.insert(bytes.end(), s.begin(), s.end());
    }
};

struct ByteReader {
    const unsigned char* data;
    std::size_t size;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (n > size - pos)
            throw format_error("index file: truncated");
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = static_cast<std::uint16_t>(data[pos] | (data[pos + 1] << 8));
        pos += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(data[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(data[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
    std::string str16() {
        const std::uint16_t n = u16();
        need(n);
        std::string s(reinterpret_cast<const char*>(data + pos), n);
        pos += n;
        return s;
    }
};

} // namespace detail

struct IndexEntry {
    std::string image_id;
    Barcode barcode;
    std::optional<IrmaCode> label;
};

// Immutable collection of equal-length, same-configuration barcodes.
struct BarcodeIndex {
    std::vector<IndexEntry> entries;
    std::size_t code_length = 0;
    std::string config_tag;
};

// Normalized Hamming similarity: 1 - popcount(a XOR b) / length.
inline double similarity(const Barcode& a, const Barcode& b) {
    if (a.length() != b.length())
        throw std::invalid_argument("similarity: barcode length mismatch");
    return 1.0 - static_cast<double>(BitVector::hamming_distance(a.bits, b.bits)) /
                     static_cast<double>(a.length());
}

inline BarcodeIndex build_index(std::vector<IndexEntry> entries) {
    if (entries.empty())
        throw std::invalid_argument("build_index: no entries");
    const std::size_t len = entries.front().barcode.length();
    const std::string& tag = entries.front().barcode.config_tag;
    std::unordered_set<std::string> ids;
    for (const IndexEntry& e : entries) {
        if (e.barcode.length() != len)
            throw std::invalid_argument("build_index: mixed barcode lengths");
        if (e.barcode.config_tag != tag)
            throw std::invalid_argument("build_index: mixed barcode configurations");
        if (!ids.insert(e.image_id).second)
            throw std::invalid_argument("build_index: duplicate image_id '" + e.image_id + "'");
    }
    BarcodeIndex idx;
    idx.code_length = len;
    idx.config_tag = tag;
    idx.entries = std::move(entries);
    return idx;
}

struct QueryHit {
    std::size_t entry_index = 0;
    std::string image_id;
    double similarity = 0.0;
};

// Exhaustive scan for the k most similar entries. Ties are broken by
// insertion order, so results are deterministic.
inline std::vector<QueryHit> query(const BarcodeIndex& index, const Barcode& probe, std::size_t k) {
    if (index.entries.empty())
        throw std::invalid_argument("query: empty index");
    if (k < 1)
        throw std::invalid_argument("query: k must be >= 1");
    if (probe.length() != index.code_length)
        throw std::invalid_argument("query: probe length does not match index code length");

    std::vector<std::pair<std::size_t, std::size_t>> dist_idx; // (hamming distance, insertion order)
    dist_idx.reserve(index.entries.size());
    for (std::size_t i = 0; i < index.entries.size(); ++i)
        dist_idx.emplace_back(BitVector::hamming_distance(probe.bits, index.entries[i].barcode.bits), i);

    const std::size_t take = std::min(k, dist_idx.size());
    std::partial_sort(dist_idx.begin(), dist_idx.begin() + take, dist_idx.end());

    std::vector<QueryHit> hits;
    hits.reserve(take);
    for (std::size_t r = 0; r < take; ++r) {
        const auto [dist, i] = dist_idx[r];
        hits.push_back({i, index.entries[i].image_id,
                        1.0 - static_cast<double>(dist) / static_cast<double>(index.code_length)});
    }
    return hits;
}

inline constexpr std::array<unsigned char, 4> index_magic{'G', 'B', 'C', 'X'};
inline constexpr std::uint16_t index_format_version = 1;

// Binary index format, little-endian:
//   magic "GBCX", version u16, code_length u32, entry count u32,
//   config_tag (u16 length + UTF-8), then per entry: image_id (u16+bytes),
//   IRMA code string (u16+bytes, empty if unlabeled), packed barcode words
//   (ceil(code_length/64) x u64). Trailing CRC32 of all preceding bytes.
inline void save_index(const BarcodeIndex& index, const std::filesystem::path& path) {
    if (index.entries.empty())
        throw std::invalid_argument("save_index: empty index");
    detail::ByteWriter w;
    w.bytes.insert(w.bytes.end(), index_magic.begin(), index_magic.end());
    w.u16(index_format_version);
    w.u32(static_cast<std::uint32_t>(index.code_length));
    w.u32(static_cast<std::uint32_t>(index.entries.size()));
    w.str16(index.config_tag);
    for (const IndexEntry& e : index.entries) {
        w.str16(e.image_id);
        w.str16(e.label ? e.label->to_string() : std::string{});
        for (std::uint64_t word : e.barcode.bits.words())
            w.u64(word);
    }
    const std::uint32_t crc = detail::crc32(w.bytes.data(), w.bytes.size());
    w.u32(crc);

    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw io_error("cannot write index: " + path.string());
    out.write(reinterpret_cast<const char*>(w.bytes.data()), static_cast<std::streamsize>(w.bytes.size()));
    if (!out)
        throw io_error("write failed: " + path.string());
}

inline BarcodeIndex load_index(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw io_error("cannot open index: " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad())
        throw io_error("read failed: " + path.string());

    if (bytes.size() < index_magic.size() || !std::equal(index_magic.begin(), index_magic.end(), bytes.begin()))
        throw format_error("index file: bad magic");
    if (bytes.size() < index_magic.size() + 4)
        throw format_error("index file: truncated");
    detail::ByteReader r{bytes.data(), bytes.size() - 4};
    r.pos = index_magic.size();

    const std::uint32_t stored_crc =
        static_cast<std::uint32_t>(bytes[bytes.size() - 4]) | (static_cast<std::uint32_t>(bytes[bytes.size() - 3]) << 8) |
        (static_cast<std::uint32_t>(bytes[bytes.size() - 2]) << 16) |
        (static_cast<std::uint32_t>(bytes[bytes.size() - 1]) << 24);
    if (detail::crc32(bytes.data(), bytes.size() - 4) != stored_crc)
        throw format_error("index file: checksum mismatch");

    const std::uint16_t version = r.u16();
    if (version != index_format_version)
        throw format_error("index file: unsupported format version " + std::to_string(version));
    const std::uint32_t code_length = r.u32();
    const std::uint32_t count = r.u32();
    if (count == 0)
        throw format_error("index file: empty index");
    const std::string tag = r.str16();
    const std::size_t words_per_code = (code_length + 63) / 64;
    const BarcodeKind kind = tag.rfind("RBC", 0) == 0 ? BarcodeKind::RBC : BarcodeKind::GBC;

    std::vector<IndexEntry> entries;
    entries.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        IndexEntry e;
        e.image_id = r.str16();
        const std::string label = r.str16();
        if (!label.empty())
            e.label = parse_irma(label);
        std::vector<std::uint64_t> words(words_per_code);
        for (std::size_t wi = 0; wi < words_per_code; ++wi)
            words[wi] = r.u64();
        e.barcode.bits = BitVector::from_words(std::move(words), code_length);
        e.barcode.kind = kind;
        e.barcode.config_tag = tag;
        entries.push_back(std::move(e));
    }
    if (r.pos != r.size)
        throw format_error("index file: trailing data");
    return build_index(std::move(entries));
}

} // namespace gbc
