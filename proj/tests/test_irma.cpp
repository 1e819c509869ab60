#include "helpers.hpp"

#include <gbc/gbc.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <string>
#include <vector>

using testutil::TempDir;

namespace {

// Random valid label drawn from a small alphabet so collisions and shared
// prefixes actually happen.
gbc::IrmaCode random_code(std::mt19937& rng) {
    std::uniform_int_distribution<int> digit(0, 2);
    gbc::IrmaCode code;
    for (int j = 0; j < 4; ++j) {
        std::string axis;
        for (int i = 0; i < gbc::irma_axis_lengths[static_cast<std::size_t>(j)]; ++i)
            axis.push_back(static_cast<char>('0' + digit(rng)));
        code.axes[static_cast<std::size_t>(j)] = axis;
    }
    return code;
}

} // namespace

TEST_CASE("labels parse into four fixed-width axes and print back unchanged") {
    const gbc::IrmaCode code = gbc::parse_irma("1121-4a0-914-700");
    CHECK(code.axes[0] == "1121");
    CHECK(code.axes[1] == "4a0");
    CHECK(code.axes[2] == "914");
    CHECK(code.axes[3] == "700");
    CHECK(code.to_string() == "1121-4a0-914-700");
}

TEST_CASE("label parsing rejects malformed input") {
    CHECK_THROWS_AS(gbc::parse_irma("1121-120-200"), gbc::format_error);        // 3 axes
    CHECK_THROWS_AS(gbc::parse_irma("1121-120-200-700-1"), gbc::format_error);  // 5 axes
    CHECK_THROWS_AS(gbc::parse_irma("112-120-200-700"), gbc::format_error);     // short axis
    CHECK_THROWS_AS(gbc::parse_irma("11211-120-200-700"), gbc::format_error);   // long axis
    CHECK_THROWS_AS(gbc::parse_irma("112!-120-200-700"), gbc::format_error);    // bad char
    CHECK_THROWS_AS(gbc::parse_irma(""), gbc::format_error);
}

TEST_CASE("mismatch indicator flags any difference at or before the position") {
    const gbc::IrmaCode q = gbc::parse_irma("1121-120-200-700");
    const gbc::IrmaCode r = gbc::parse_irma("1131-120-210-700");

    // axis 1 differs at position 3 only
    CHECK(gbc::delta(q, r, 1, 1) == 0);
    CHECK(gbc::delta(q, r, 1, 2) == 0);
    CHECK(gbc::delta(q, r, 1, 3) == 1);
    CHECK(gbc::delta(q, r, 1, 4) == 1); // positions after the mismatch stay poisoned
    // axis 2 is identical
    for (int i = 1; i <= 3; ++i)
        CHECK(gbc::delta(q, r, 2, i) == 0);
    // axis 3 differs at position 2
    CHECK(gbc::delta(q, r, 3, 1) == 0);
    CHECK(gbc::delta(q, r, 3, 2) == 1);
    CHECK(gbc::delta(q, r, 3, 3) == 1);

    CHECK_THROWS_AS(gbc::delta(q, r, 0, 1), std::out_of_range);
    CHECK_THROWS_AS(gbc::delta(q, r, 5, 1), std::out_of_range);
    CHECK_THROWS_AS(gbc::delta(q, r, 2, 4), std::out_of_range);
}

TEST_CASE("mismatch indicator never decreases along an axis") {
    std::mt19937 rng(61u);
    for (int trial = 0; trial < 200; ++trial) {
        const gbc::IrmaCode q = random_code(rng);
        const gbc::IrmaCode r = random_code(rng);
        for (int axis = 1; axis <= 4; ++axis) {
            int prev = 0;
            for (int i = 1; i <= gbc::irma_axis_lengths[static_cast<std::size_t>(axis - 1)]; ++i) {
                const int d = gbc::delta(q, r, axis, i);
                CHECK(d >= prev);
                prev = d;
            }
        }
    }
}

TEST_CASE("identical labels score zero error") {
    const gbc::IrmaCode code = gbc::parse_irma("1121-120-200-700");
    CHECK(gbc::pair_error(code, code, gbc::BranchTable::uniform(10)) == 0.0);
}

TEST_CASE("pair error worked examples under uniform branching 10") {
    const gbc::BranchTable b10 = gbc::BranchTable::uniform(10);
    const gbc::IrmaCode base = gbc::parse_irma("1121-120-200-700");

    SECTION("first-position mismatch on the technical axis") {
        // every position of that axis is poisoned: 0.1 * (1 + 1/2 + 1/3 + 1/4)
        const gbc::IrmaCode r = gbc::parse_irma("2121-120-200-700");
        CHECK(gbc::pair_error(base, r, b10) ==
              Catch::Approx(0.1 * (1.0 + 0.5 + 1.0 / 3.0 + 0.25)).margin(1e-9));
        CHECK(gbc::pair_error(base, r, b10) == Catch::Approx(0.208333333333).margin(1e-9));
    }
    SECTION("last-position mismatch on the anatomical axis") {
        const gbc::IrmaCode r = gbc::parse_irma("1121-120-201-700");
        CHECK(gbc::pair_error(base, r, b10) == Catch::Approx(1.0 / 30.0).margin(1e-9));
        CHECK(gbc::pair_error(base, r, b10) == Catch::Approx(0.033333333333).margin(1e-9));
    }
    SECTION("axis errors add up") {
        const gbc::IrmaCode r = gbc::parse_irma("2121-120-201-700");
        const auto by_axis = gbc::pair_error_by_axis(base, r, b10);
        CHECK(by_axis[0] == Catch::Approx(0.208333333333).margin(1e-9));
        CHECK(by_axis[1] == 0.0);
        CHECK(by_axis[2] == Catch::Approx(0.033333333333).margin(1e-9));
        CHECK(by_axis[3] == 0.0);
        CHECK(gbc::pair_error(base, r, b10) == Catch::Approx(0.241666666667).margin(1e-9));
    }
}

TEST_CASE("total error sums pair errors and rejects an empty test set") {
    const gbc::BranchTable b10 = gbc::BranchTable::uniform(10);
    const gbc::IrmaCode a = gbc::parse_irma("1121-120-200-700");
    const gbc::IrmaCode b = gbc::parse_irma("2121-120-200-700");
    const gbc::IrmaCode c = gbc::parse_irma("1121-120-201-700");

    const double total = gbc::total_error({{a, b}, {a, c}, {a, a}}, b10);
    CHECK(total == Catch::Approx(0.208333333333 + 0.033333333333).margin(1e-9));
    CHECK_THROWS_AS(gbc::total_error({}, b10), std::invalid_argument);
}

TEST_CASE("branch factors count distinct characters per position") {
    const std::vector<gbc::IrmaCode> corpus{
        gbc::parse_irma("1121-120-200-700"),
        gbc::parse_irma("2121-121-210-700"),
        gbc::parse_irma("3121-122-220-700"),
    };
    const gbc::BranchTable t = gbc::build_branch_table(corpus);
    CHECK(t.branches[0] == std::vector<int>{3, 1, 1, 1});
    CHECK(t.branches[1] == std::vector<int>{1, 1, 3});
    CHECK(t.branches[2] == std::vector<int>{1, 3, 1});
    CHECK(t.branches[3] == std::vector<int>{1, 1, 1});
    CHECK_THROWS_AS(gbc::build_branch_table({}), std::invalid_argument);
}

TEST_CASE("branch table validation") {
    gbc::BranchTable t = gbc::BranchTable::uniform(4);
    SECTION("valid") {
        CHECK_NOTHROW(gbc::validate_branch_table(t));
    }
    SECTION("wrong position count") {
        t.branches[2].push_back(4);
        CHECK_THROWS_AS(gbc::validate_branch_table(t), std::invalid_argument);
    }
    SECTION("zero branch factor") {
        t.branches[0][1] = 0;
        CHECK_THROWS_AS(gbc::validate_branch_table(t), std::invalid_argument);
    }
    SECTION("uniform rejects nonpositive factors") {
        CHECK_THROWS_AS(gbc::BranchTable::uniform(0), std::invalid_argument);
    }
}

TEST_CASE("suitability rewards low error and short codes") {
    CHECK(gbc::eta_suitability(476.62, 512.0, 501.96, 8192.0) ==
          Catch::Approx(16.85065671).margin(1e-6));
    CHECK(gbc::eta_suitability(351.798, 8192.0, 501.96, 8192.0) ==
          Catch::Approx(1.42684154).margin(1e-6));
    CHECK(gbc::eta_suitability(501.96, 7200.0, 501.96, 8192.0) ==
          Catch::Approx(1.13777778).margin(1e-6));
    // the worst method at the longest length scores exactly 1
    CHECK(gbc::eta_suitability(501.96, 8192.0, 501.96, 8192.0) == 1.0);
    CHECK_THROWS_AS(gbc::eta_suitability(0.0, 512.0, 501.96, 8192.0), std::invalid_argument);
    CHECK_THROWS_AS(gbc::eta_suitability(476.62, 0.0, 501.96, 8192.0), std::invalid_argument);
}

TEST_CASE("compute_eta uses the maxima of the compared runs") {
    std::vector<gbc::EvalRecord> records{
        {"short", 100.0, 512, 0.0},
        {"worst", 400.0, 1024, 0.0},
        {"long", 200.0, 2048, 0.0},
    };
    gbc::compute_eta(records);
    CHECK(records[0].eta == Catch::Approx((400.0 * 2048.0) / (100.0 * 512.0)));
    CHECK(records[1].eta == Catch::Approx(2.0));
    CHECK(records[2].eta == Catch::Approx(2.0));
}

TEST_CASE("branch table files round-trip") {
    TempDir dir;
    const auto path = dir.file("branches.txt");

    gbc::BranchTable t = gbc::BranchTable::uniform(1);
    t.branches[0] = {9, 4, 2, 2};
    t.branches[1] = {3, 2, 5};
    gbc::save_branch_table(t, path);

    const gbc::BranchTable back = gbc::load_branch_table(path);
    for (int j = 0; j < 4; ++j)
        CHECK(back.branches[static_cast<std::size_t>(j)] ==
              t.branches[static_cast<std::size_t>(j)]);
}

TEST_CASE("branch table files are validated while loading") {
    TempDir dir;
    SECTION("missing file") {
        CHECK_THROWS_AS(gbc::load_branch_table(dir.file("none.txt")), gbc::io_error);
    }
    SECTION("too few lines") {
        testutil::write_bytes(dir.file("short.txt"), "2 2 2 2\n3 3 3\n");
        CHECK_THROWS_AS(gbc::load_branch_table(dir.file("short.txt")), gbc::format_error);
    }
    SECTION("non-integer token") {
        testutil::write_bytes(dir.file("alpha.txt"), "2 2 2 2\n3 3 x\n3 3 3\n3 3 3\n");
        CHECK_THROWS_AS(gbc::load_branch_table(dir.file("alpha.txt")), gbc::format_error);
    }
    SECTION("wrong position count") {
        testutil::write_bytes(dir.file("narrow.txt"), "2 2 2\n3 3 3\n3 3 3\n3 3 3\n");
        CHECK_THROWS_AS(gbc::load_branch_table(dir.file("narrow.txt")), gbc::format_error);
    }
}

TEST_CASE("labels CSV reader") {
    TempDir dir;
    const auto path = dir.file("labels.csv");
    testutil::write_bytes(path, "# image_id,irma_code\nimg-1,1121-120-200-700\r\nimg-2,2121-121-210-700\n\n");

    const auto labels = gbc::read_labels_csv(path);
    REQUIRE(labels.size() == 2);
    CHECK(labels[0].first == "img-1");
    CHECK(labels[0].second.to_string() == "1121-120-200-700");
    CHECK(labels[1].first == "img-2");

    testutil::write_bytes(path, "img-1,1121-120-200-700,extra\n");
    CHECK_THROWS_AS(gbc::read_labels_csv(path), gbc::format_error);
}
