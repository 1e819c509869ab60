#include "helpers.hpp"

#include <gbc/gbc.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <fstream>
#include <random>
#include <string>
#include <vector>

using testutil::TempDir;

namespace {

gbc::Barcode make_code(const gbc::BitVector& bits, const std::string& tag = "GBC(2,2,5,5)") {
    gbc::Barcode code;
    code.bits = bits;
    code.kind = tag.rfind("RBC", 0) == 0 ? gbc::BarcodeKind::RBC : gbc::BarcodeKind::GBC;
    code.config_tag = tag;
    return code;
}

gbc::BarcodeIndex random_index(std::mt19937& rng, std::size_t entries, std::size_t bits) {
    std::vector<gbc::IndexEntry> list;
    for (std::size_t i = 0; i < entries; ++i) {
        gbc::IndexEntry e;
        e.image_id = "img-" + std::to_string(i);
        e.barcode = make_code(testutil::random_bits(rng, bits));
        if (i % 3 == 0)
            e.label = gbc::parse_irma("1121-12" + std::to_string(i % 10) + "-4" +
                                      std::to_string(i % 10) + "0-700");
        list.push_back(std::move(e));
    }
    return gbc::build_index(std::move(list));
}

// Reference retrieval: stable-sort every entry by distance and take the head.
std::vector<std::string> oracle_topk(const gbc::BarcodeIndex& index, const gbc::Barcode& probe,
                                     std::size_t k) {
    std::vector<std::pair<std::size_t, std::size_t>> order; // (distance, position)
    for (std::size_t i = 0; i < index.entries.size(); ++i)
        order.emplace_back(
            gbc::BitVector::hamming_distance(index.entries[i].barcode.bits, probe.bits), i);
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < std::min(k, order.size()); ++i)
        ids.push_back(index.entries[order[i].second].image_id);
    return ids;
}

void corrupt_byte(const std::filesystem::path& path, std::size_t offset, unsigned char value) {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    REQUIRE(f.good());
    f.seekp(static_cast<std::streamoff>(offset));
    f.put(static_cast<char>(value));
}

} // namespace

TEST_CASE("crc32 matches the standard reflected polynomial check value") {
    const std::string probe = "123456789";
    CHECK(gbc::detail::crc32(reinterpret_cast<const unsigned char*>(probe.data()),
                             probe.size()) == 0xCBF43926u);
    CHECK(gbc::detail::crc32(nullptr, 0) == 0x00000000u);
}

TEST_CASE("similarity is the fraction of matching bits") {
    const gbc::Barcode a = make_code(gbc::BitVector::from_string("10110100"));
    const gbc::Barcode b = make_code(gbc::BitVector::from_string("10110100"));
    const gbc::Barcode c = make_code(gbc::BitVector::from_string("01001011"));
    const gbc::Barcode d = make_code(gbc::BitVector::from_string("10110111"));
    CHECK(gbc::similarity(a, b) == 1.0);
    CHECK(gbc::similarity(a, c) == 0.0);
    CHECK(gbc::similarity(a, d) == Catch::Approx(0.75));
    CHECK(gbc::similarity(a, d) == gbc::similarity(d, a));
    CHECK_THROWS_AS(gbc::similarity(a, make_code(gbc::BitVector::from_string("1011"))),
                    std::invalid_argument);
}

TEST_CASE("build_index enforces uniform configuration and unique ids") {
    std::mt19937 rng(51u);

    SECTION("empty input is rejected") {
        CHECK_THROWS_AS(gbc::build_index({}), std::invalid_argument);
    }
    SECTION("a single entry builds an index of size 1") {
        std::vector<gbc::IndexEntry> list(1);
        list[0].image_id = "only";
        list[0].barcode = make_code(testutil::random_bits(rng, 16));
        CHECK(gbc::build_index(std::move(list)).entries.size() == 1);
    }
    SECTION("duplicate image ids are rejected") {
        std::vector<gbc::IndexEntry> list(2);
        list[0].image_id = "same";
        list[0].barcode = make_code(testutil::random_bits(rng, 16));
        list[1].image_id = "same";
        list[1].barcode = make_code(testutil::random_bits(rng, 16));
        CHECK_THROWS_AS(gbc::build_index(std::move(list)), std::invalid_argument);
    }
    SECTION("mixed code lengths are rejected") {
        std::vector<gbc::IndexEntry> list(2);
        list[0].image_id = "a";
        list[0].barcode = make_code(testutil::random_bits(rng, 16));
        list[1].image_id = "b";
        list[1].barcode = make_code(testutil::random_bits(rng, 24));
        CHECK_THROWS_AS(gbc::build_index(std::move(list)), std::invalid_argument);
    }
    SECTION("mixed config tags are rejected") {
        std::vector<gbc::IndexEntry> list(2);
        list[0].image_id = "a";
        list[0].barcode = make_code(testutil::random_bits(rng, 16), "GBC(2,2,5,5)");
        list[1].image_id = "b";
        list[1].barcode = make_code(testutil::random_bits(rng, 16), "RBC(4,4)");
        CHECK_THROWS_AS(gbc::build_index(std::move(list)), std::invalid_argument);
    }
}

TEST_CASE("query finds an indexed barcode at rank 1 with similarity 1.0") {
    std::mt19937 rng(52u);
    const gbc::BarcodeIndex index = random_index(rng, 20, 96);
    const std::vector<gbc::QueryHit> hits = gbc::query(index, index.entries[7].barcode, 3);
    REQUIRE(hits.size() == 3);
    CHECK(hits[0].image_id == "img-7");
    CHECK(hits[0].similarity == 1.0);
    CHECK(hits[0].entry_index == 7);
}

TEST_CASE("query clamps k to the index size and rejects k = 0") {
    std::mt19937 rng(53u);
    const gbc::BarcodeIndex index = random_index(rng, 5, 32);
    CHECK(gbc::query(index, index.entries[0].barcode, 50).size() == 5);
    CHECK_THROWS_AS(gbc::query(index, index.entries[0].barcode, 0), std::invalid_argument);
}

TEST_CASE("query matches a full stable sort for random probes") {
    std::mt19937 rng(54u);
    const gbc::BarcodeIndex index = random_index(rng, 100, 96);
    for (int trial = 0; trial < 20; ++trial) {
        const gbc::Barcode probe = make_code(testutil::random_bits(rng, 96));
        const std::vector<gbc::QueryHit> hits = gbc::query(index, probe, 7);
        const std::vector<std::string> expected = oracle_topk(index, probe, 7);
        REQUIRE(hits.size() == expected.size());
        for (std::size_t i = 0; i < hits.size(); ++i)
            CHECK(hits[i].image_id == expected[i]);
    }
}

TEST_CASE("equal distances rank in insertion order") {
    std::vector<gbc::IndexEntry> list(3);
    list[0].image_id = "first";
    list[0].barcode = make_code(gbc::BitVector::from_string("1000"));
    list[1].image_id = "second";
    list[1].barcode = make_code(gbc::BitVector::from_string("0001"));
    list[2].image_id = "far";
    list[2].barcode = make_code(gbc::BitVector::from_string("1111"));
    const gbc::BarcodeIndex index = gbc::build_index(std::move(list));

    const gbc::Barcode probe = make_code(gbc::BitVector::from_string("0000"));
    const std::vector<gbc::QueryHit> hits = gbc::query(index, probe, 3);
    CHECK(hits[0].image_id == "first");
    CHECK(hits[1].image_id == "second");
    CHECK(hits[2].image_id == "far");
}

TEST_CASE("query rejects an empty index and a mismatched probe length") {
    std::mt19937 rng(55u);
    const gbc::BarcodeIndex index = random_index(rng, 4, 32);
    CHECK_THROWS_AS(gbc::query(index, make_code(testutil::random_bits(rng, 16)), 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(gbc::query(gbc::BarcodeIndex{}, make_code(testutil::random_bits(rng, 32)), 1),
                    std::invalid_argument);
}

TEST_CASE("index file round-trips bit for bit") {
    TempDir dir;
    std::mt19937 rng(56u);
    // 70 bits exercises the padded tail of the last packed word
    const gbc::BarcodeIndex index = random_index(rng, 9, 70);

    const auto first = dir.file("a.gbcx");
    const auto second = dir.file("b.gbcx");
    gbc::save_index(index, first);
    const gbc::BarcodeIndex loaded = gbc::load_index(first);

    REQUIRE(loaded.entries.size() == index.entries.size());
    CHECK(loaded.code_length == index.code_length);
    CHECK(loaded.config_tag == index.config_tag);
    for (std::size_t i = 0; i < index.entries.size(); ++i) {
        CHECK(loaded.entries[i].image_id == index.entries[i].image_id);
        CHECK(loaded.entries[i].barcode.bits == index.entries[i].barcode.bits);
        CHECK(loaded.entries[i].barcode.config_tag == index.entries[i].barcode.config_tag);
        CHECK(loaded.entries[i].barcode.kind == index.entries[i].barcode.kind);
        CHECK(loaded.entries[i].label == index.entries[i].label);
    }

    gbc::save_index(loaded, second);
    std::ifstream fa(first, std::ios::binary), fb(second, std::ios::binary);
    const std::string bytes_a((std::istreambuf_iterator<char>(fa)), {});
    const std::string bytes_b((std::istreambuf_iterator<char>(fb)), {});
    CHECK(bytes_a == bytes_b);
}

TEST_CASE("loading rejects damaged index files") {
    TempDir dir;
    std::mt19937 rng(57u);
    const auto path = dir.file("x.gbcx");
    gbc::save_index(random_index(rng, 6, 64), path);
    const std::size_t size = static_cast<std::size_t>(std::filesystem::file_size(path));

    SECTION("wrong magic") {
        corrupt_byte(path, 0, 'X');
        CHECK_THROWS_WITH(gbc::load_index(path), Catch::Matchers::ContainsSubstring("magic"));
    }
    SECTION("flipped payload byte fails the checksum") {
        corrupt_byte(path, size / 2, 0xA5);
        CHECK_THROWS_WITH(gbc::load_index(path), Catch::Matchers::ContainsSubstring("checksum"));
    }
    SECTION("truncation") {
        std::ifstream in(path, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), {});
        in.close();
        bytes.resize(bytes.size() - 5);
        testutil::write_bytes(path, bytes);
        CHECK_THROWS_AS(gbc::load_index(path), gbc::format_error);
    }
    SECTION("unsupported version") {
        // patch the version field and restamp the trailing checksum so only
        // the version check can complain
        std::ifstream in(path, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), {});
        in.close();
        bytes[4] = 2;
        const std::uint32_t crc = gbc::detail::crc32(
            reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size() - 4);
        for (int i = 0; i < 4; ++i)
            bytes[bytes.size() - 4 + static_cast<std::size_t>(i)] =
                static_cast<char>((crc >> (8 * i)) & 0xFF);
        testutil::write_bytes(path, bytes);
        CHECK_THROWS_WITH(gbc::load_index(path), Catch::Matchers::ContainsSubstring("version"));
    }
    SECTION("missing file is an I/O error") {
        CHECK_THROWS_AS(gbc::load_index(dir.file("absent.gbcx")), gbc::io_error);
    }
}
