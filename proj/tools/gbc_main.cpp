// Command-line front end: encode single images, build and query barcode
// indexes, score retrieval runs against hierarchical labels, and sweep
// descriptor configurations.

#include <gbc/gbc.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// Shared encoder configuration and flag wiring

struct EncodeOptions {
    std::string kind = "gbc";
    int size = 32; // square side images are resized to before encoding
    gbc::GaborBankConfig bank;
    gbc::DownsampleSpec down;
    bool block_mean = false;
    gbc::RadonConfig radon;
};

// Which descriptor-shaping flags the user passed explicitly. Needed to detect
// conflicts with the configuration stored in an existing index.
struct ExplicitFlags {
    bool kind = false;
    bool scales = false, orients = false, window_rows = false, window_cols = false;
    bool angles = false, bins = false;
};

void add_encode_options(CLI::App* cmd, EncodeOptions& o) {
    cmd->add_option("--kind", o.kind, "barcode family: gbc or rbc")
        ->check(CLI::IsMember({"gbc", "rbc"}));
    cmd->add_option("--size", o.size, "square side images are resized to, power of two (default 32)");
    cmd->add_option("--scales", o.bank.scales, "Gabor frequency scales u (default 5)");
    cmd->add_option("--orients", o.bank.orientations, "Gabor orientations v (default 8)");
    cmd->add_option("--window-rows", o.bank.window_rows, "filter window rows s, odd (default 23)");
    cmd->add_option("--window-cols", o.bank.window_cols, "filter window cols t, odd (default 23)");
    cmd->add_option("--fmax", o.bank.f_max, "frequency of the finest scale, cycles/pixel (default 0.25)");
    cmd->add_option("--sigma-f", o.bank.sigma_f, "envelope width times frequency (default 0.56)");
    cmd->add_option("--gamma", o.bank.gamma, "envelope weight on the minor axis (default 1)");
    cmd->add_option("--eta-aspect", o.bank.eta_aspect, "amplitude normalization aspect term (default 1)");
    cmd->add_option("--phi", o.bank.phi, "carrier phase offset (default 0)");
    cmd->add_option("--d1", o.down.d1, "downsampling factor along columns (default 4)");
    cmd->add_option("--d2", o.down.d2, "downsampling factor along rows (default 4)");
    cmd->add_flag("--block-mean", o.block_mean, "average each block instead of strided sampling");
    cmd->add_option("--angles", o.radon.n_angles, "projection angles for rbc (default 4)");
    cmd->add_option("--bins", o.radon.bins, "samples kept per projection (default 128)");
}

ExplicitFlags read_explicit(const CLI::App* cmd) {
    ExplicitFlags f;
    f.kind = cmd->count("--kind") > 0;
    f.scales = cmd->count("--scales") > 0;
    f.orients = cmd->count("--orients") > 0;
    f.window_rows = cmd->count("--window-rows") > 0;
    f.window_cols = cmd->count("--window-cols") > 0;
    f.angles = cmd->count("--angles") > 0;
    f.bins = cmd->count("--bins") > 0;
    return f;
}

gbc::Barcode encode_image(const gbc::GrayImage& raw, const EncodeOptions& o) {
    const gbc::GrayImage img = gbc::normalize(raw, o.size, o.size);
    if (o.kind == "rbc")
        return gbc::make_rbc(img, o.radon);
    return gbc::make_gbc(img, o.bank, o.down,
                         o.block_mean ? gbc::DownsampleMode::block_mean
                                      : gbc::DownsampleMode::decimate);
}

// ---------------------------------------------------------------------------
// Config tags: "GBC(u,v,s,t)" / "RBC(angles,bins)" round-trip so a query can
// rebuild the exact encoder an index was built with.

std::pair<std::string, std::vector<int>> parse_config_tag(const std::string& tag) {
    const std::size_t open = tag.find('(');
    if (open == std::string::npos || tag.empty() || tag.back() != ')')
        throw gbc::format_error("unrecognized config tag: " + tag);
    std::vector<int> numbers;
    std::string body = tag.substr(open + 1, tag.size() - open - 2);
    std::stringstream ss(body);
    std::string field;
    while (std::getline(ss, field, ',')) {
        std::size_t used = 0;
        int value = 0;
        try {
            value = std::stoi(field, &used);
        } catch (const std::exception&) {
            throw gbc::format_error("bad number in config tag: " + tag);
        }
        if (used != field.size())
            throw gbc::format_error("bad number in config tag: " + tag);
        numbers.push_back(value);
    }
    return {tag.substr(0, open), numbers};
}

void adopt(int& field, bool explicitly_set, int tag_value, const char* flag) {
    if (explicitly_set && field != tag_value)
        throw gbc::format_error(std::string(flag) + "=" + std::to_string(field) +
                                " conflicts with the index configuration value " +
                                std::to_string(tag_value));
    field = tag_value;
}

// Make `o` reproduce the descriptor an index was built with, refusing
// explicitly-passed flags that contradict it.
void apply_tag(EncodeOptions& o, const ExplicitFlags& set, const std::string& tag) {
    const auto [family, numbers] = parse_config_tag(tag);
    if (family == "GBC") {
        if (numbers.size() != 4)
            throw gbc::format_error("malformed GBC config tag: " + tag);
        if (set.kind && o.kind != "gbc")
            throw gbc::format_error("index holds GBC barcodes; --kind=" + o.kind + " does not match");
        if (set.angles || set.bins)
            throw gbc::format_error("projection flags do not apply to a GBC index");
        o.kind = "gbc";
        adopt(o.bank.scales, set.scales, numbers[0], "--scales");
        adopt(o.bank.orientations, set.orients, numbers[1], "--orients");
        adopt(o.bank.window_rows, set.window_rows, numbers[2], "--window-rows");
        adopt(o.bank.window_cols, set.window_cols, numbers[3], "--window-cols");
    } else if (family == "RBC") {
        if (numbers.size() != 2)
            throw gbc::format_error("malformed RBC config tag: " + tag);
        if (set.kind && o.kind != "rbc")
            throw gbc::format_error("index holds RBC barcodes; --kind=" + o.kind + " does not match");
        if (set.scales || set.orients || set.window_rows || set.window_cols)
            throw gbc::format_error("Gabor flags do not apply to an RBC index");
        o.kind = "rbc";
        adopt(o.radon.n_angles, set.angles, numbers[0], "--angles");
        adopt(o.radon.bins, set.bins, numbers[1], "--bins");
    } else {
        throw gbc::format_error("unrecognized config tag family: " + family);
    }
}

// ---------------------------------------------------------------------------
// Small I/O helpers

fs::path resolve(const std::string& root, const std::string& path) {
    fs::path p(path);
    if (root.empty() || p.is_absolute())
        return p;
    return fs::path(root) / p;
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw gbc::io_error("cannot open for writing: " + path.string());
    out << content;
    if (!out)
        throw gbc::io_error("write failed: " + path.string());
}

std::string format_double(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

std::string format_compact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// encode

struct EncodeCmd {
    std::string image_path;
    std::string out_path;
    std::string format = "text";
    bool tag_form = false;
    EncodeOptions enc;
};

// Self-describing single-barcode record for --format binary: bit count (u32),
// tag length (u16) + tag, packed 64-bit words, all little-endian.
std::vector<unsigned char> barcode_record(const gbc::Barcode& code) {
    gbc::detail::ByteWriter w;
    w.u32(static_cast<std::uint32_t>(code.length()));
    w.str16(code.config_tag);
    for (std::uint64_t word : code.bits.words())
        w.u64(word);
    return std::move(w.bytes);
}

int run_encode(const EncodeCmd& cmd) {
    const gbc::GrayImage raw = gbc::load_image(cmd.image_path);
    const gbc::Barcode code = encode_image(raw, cmd.enc);

    if (cmd.format == "binary") {
        const std::vector<unsigned char> record = barcode_record(code);
        std::ofstream out(cmd.out_path, std::ios::binary);
        if (!out)
            throw gbc::io_error("cannot open for writing: " + cmd.out_path);
        out.write(reinterpret_cast<const char*>(record.data()),
                  static_cast<std::streamsize>(record.size()));
        if (!out)
            throw gbc::io_error("write failed: " + cmd.out_path);
        return 0;
    }

    std::string line;
    if (cmd.format == "csv")
        line = fs::path(cmd.image_path).stem().string() + "," + code.config_tag + "," +
               code.bits.to_string();
    else
        line = cmd.tag_form ? gbc::to_text(code) : code.bits.to_string();
    line += "\n";

    if (cmd.out_path.empty())
        std::cout << line;
    else
        write_text_file(cmd.out_path, line);
    return 0;
}

// ---------------------------------------------------------------------------
// index

struct IndexCmd {
    std::string manifest_path;
    std::string out_path;
    std::string root;
    bool skip_bad = false;
    bool append = false;
    unsigned threads = 1;
    EncodeOptions enc;
    ExplicitFlags set;
};

// Encode every manifest row; failed rows are either fatal or, with skip_bad,
// dropped with a warning. Results keep manifest order regardless of threads.
std::vector<gbc::IndexEntry> encode_rows(const std::vector<gbc::ManifestRow>& rows,
                                         const std::string& root, const EncodeOptions& enc,
                                         unsigned threads, bool skip_bad,
                                         std::vector<std::string>& warnings) {
    std::vector<std::optional<gbc::IndexEntry>> slots(rows.size());
    std::vector<std::pair<std::size_t, std::string>> failures;
    std::mutex failures_mutex;

    gbc::parallel_for(rows.size(), threads, [&](std::size_t i) {
        const gbc::ManifestRow& row = rows[i];
        try {
            gbc::IndexEntry entry;
            entry.image_id = row.image_id;
            if (!row.irma_code.empty())
                entry.label = gbc::parse_irma(row.irma_code);
            entry.barcode = encode_image(gbc::load_image(resolve(root, row.path).string()), enc);
            slots[i] = std::move(entry);
        } catch (const std::exception& e) {
            if (!skip_bad)
                throw;
            const std::lock_guard<std::mutex> lock(failures_mutex);
            failures.emplace_back(i, row.image_id + " (" + row.path + "): " + e.what());
        }
    });

    std::sort(failures.begin(), failures.end());
    for (const auto& [i, message] : failures)
        warnings.push_back("skipped " + message);

    std::vector<gbc::IndexEntry> entries;
    entries.reserve(rows.size());
    for (std::optional<gbc::IndexEntry>& slot : slots)
        if (slot)
            entries.push_back(std::move(*slot));
    return entries;
}

int run_index(const IndexCmd& cmd) {
    EncodeOptions enc = cmd.enc;
    std::vector<gbc::IndexEntry> entries;
    if (cmd.append) {
        gbc::BarcodeIndex existing = gbc::load_index(cmd.out_path);
        apply_tag(enc, cmd.set, existing.config_tag);
        entries = std::move(existing.entries);
    }
    const std::size_t preloaded = entries.size();

    const std::vector<gbc::ManifestRow> rows = gbc::read_manifest(cmd.manifest_path);
    std::vector<std::string> warnings;
    const Clock::time_point t0 = Clock::now();
    std::vector<gbc::IndexEntry> fresh =
        encode_rows(rows, cmd.root, enc, cmd.threads, cmd.skip_bad, warnings);
    const double seconds = ms_since(t0) / 1000.0;

    for (const std::string& w : warnings)
        std::cerr << "warning: " << w << "\n";

    const std::size_t encoded = fresh.size();
    for (gbc::IndexEntry& e : fresh)
        entries.push_back(std::move(e));

    const gbc::BarcodeIndex index = gbc::build_index(std::move(entries));
    gbc::save_index(index, cmd.out_path);

    std::cout << "indexed " << encoded << " images (" << index.code_length << " bits each, "
              << index.config_tag << ") in " << format_double(seconds, 2) << " s, "
              << format_double(seconds > 0 ? static_cast<double>(encoded) / seconds : 0.0, 1)
              << " img/s";
    if (preloaded > 0)
        std::cout << ", " << preloaded << " carried over";
    if (!warnings.empty())
        std::cout << ", " << warnings.size() << " skipped";
    std::cout << "\n" << "wrote " << cmd.out_path << " (" << index.entries.size()
              << " entries)" << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// query

struct QueryCmd {
    std::string index_path;
    std::string image_path;
    std::string out_path;
    std::string format = "text";
    std::size_t topk = 5;
    EncodeOptions enc;
    ExplicitFlags set;
};

int run_query(const QueryCmd& cmd) {
    const gbc::BarcodeIndex index = gbc::load_index(cmd.index_path);
    EncodeOptions enc = cmd.enc;
    apply_tag(enc, cmd.set, index.config_tag);

    const gbc::Barcode probe = encode_image(gbc::load_image(cmd.image_path), enc);
    const std::vector<gbc::QueryHit> hits = gbc::query(index, probe, cmd.topk);

    std::ostringstream out;
    if (cmd.format == "csv")
        out << "rank,image_id,similarity,irma_code\n";
    for (std::size_t r = 0; r < hits.size(); ++r) {
        const gbc::QueryHit& hit = hits[r];
        const std::optional<gbc::IrmaCode>& label = index.entries[hit.entry_index].label;
        if (cmd.format == "csv") {
            out << (r + 1) << "," << hit.image_id << "," << format_double(hit.similarity, 6)
                << "," << (label ? label->to_string() : "") << "\n";
        } else {
            out << (r + 1) << " " << hit.image_id << " " << format_double(hit.similarity, 6);
            if (label)
                out << " " << label->to_string();
            out << "\n";
        }
    }

    std::cout << out.str();
    if (!cmd.out_path.empty())
        write_text_file(cmd.out_path, out.str());
    return 0;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateCmd {
    std::string index_path;
    std::string test_manifest;
    std::string branch_table_path;
    std::string replay_path;
    std::string out_path;
    std::string format = "text";
    std::string root;
    bool skip_bad = false;
    unsigned threads = 1;
    double emax = 0.0; // 0 = not provided
    double lmax = 0.0;
    EncodeOptions enc;
    ExplicitFlags set;
};

struct TestCase {
    std::string image_id;
    gbc::GrayImage image;
    gbc::IrmaCode label;
};

struct CaseResult {
    std::string hit_id;
    double similarity = 0.0;
    std::array<double, 4> axis_error{};
    bool exact = false;
    double encode_ms = 0.0;
    double query_ms = 0.0;
};

// Rows of "method,e_total,l_code"; '#' comments, blank lines and one optional
// header line are tolerated. Method names may themselves contain commas (the
// config tags do), so the two numeric fields are split off from the right.
std::vector<gbc::EvalRecord> read_replay_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw gbc::io_error("cannot open replay file: " + path.string());
    std::vector<gbc::EvalRecord> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line[0] == '#')
            continue;
        const std::size_t last = line.rfind(',');
        const std::size_t mid = last == std::string::npos ? std::string::npos
                                                          : line.rfind(',', last - 1);
        if (mid == std::string::npos)
            throw gbc::format_error("replay row needs method,e_total,l_code at line " +
                                    std::to_string(lineno));
        try {
            gbc::EvalRecord rec;
            rec.method_name = line.substr(0, mid);
            rec.e_total = std::stod(line.substr(mid + 1, last - mid - 1));
            rec.l_code = std::stol(line.substr(last + 1));
            records.push_back(std::move(rec));
        } catch (const std::exception&) {
            if (records.empty() && lineno == 1)
                continue; // header line
            throw gbc::format_error("bad replay row at line " + std::to_string(lineno));
        }
    }
    return records;
}

int run_replay(const EvaluateCmd& cmd) {
    std::vector<gbc::EvalRecord> records = read_replay_csv(cmd.replay_path);
    if (records.empty())
        throw gbc::format_error("replay file holds no rows");

    if (cmd.emax > 0.0 && cmd.lmax > 0.0) {
        for (gbc::EvalRecord& r : records)
            r.eta = gbc::eta_suitability(r.e_total, static_cast<double>(r.l_code), cmd.emax,
                                         cmd.lmax);
    } else {
        gbc::compute_eta(records);
    }

    std::vector<std::size_t> order(records.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return records[a].eta > records[b].eta; });

    std::ostringstream csv;
    csv << "method,e_total,l_code,eta\n";
    for (std::size_t i : order) {
        const gbc::EvalRecord& r = records[i];
        csv << r.method_name << "," << format_compact(r.e_total) << "," << r.l_code << ","
            << format_double(r.eta, 8) << "\n";
    }

    std::ostringstream table;
    table << "replayed " << records.size() << " runs, ranked by eta (higher is better)\n";
    for (std::size_t i : order) {
        const gbc::EvalRecord& r = records[i];
        table << "  " << r.method_name << "  E_total=" << format_compact(r.e_total)
              << "  L_code=" << r.l_code << "  eta=" << format_double(r.eta, 8) << "\n";
    }

    std::cout << (cmd.format == "csv" ? csv.str() : table.str());
    if (!cmd.out_path.empty())
        write_text_file(cmd.out_path, csv.str());
    return 0;
}

std::vector<TestCase> load_test_cases(const EvaluateCmd& cmd) {
    const std::vector<gbc::ManifestRow> rows = gbc::read_manifest(cmd.test_manifest);
    std::vector<TestCase> cases;
    for (const gbc::ManifestRow& row : rows) {
        try {
            if (row.irma_code.empty())
                throw gbc::format_error("test row '" + row.image_id + "' has no label");
            TestCase tc;
            tc.image_id = row.image_id;
            tc.label = gbc::parse_irma(row.irma_code);
            tc.image = gbc::load_image(resolve(cmd.root, row.path).string());
            cases.push_back(std::move(tc));
        } catch (const std::exception& e) {
            if (!cmd.skip_bad)
                throw;
            std::cerr << "warning: skipped " << row.image_id << ": " << e.what() << "\n";
        }
    }
    if (cases.empty())
        throw gbc::format_error("no usable test rows in " + cmd.test_manifest);
    return cases;
}

gbc::BranchTable derive_branch_table(const gbc::BarcodeIndex& index,
                                     const std::vector<TestCase>& cases, std::size_t& corpus_size) {
    std::vector<gbc::IrmaCode> corpus;
    for (const gbc::IndexEntry& e : index.entries)
        if (e.label)
            corpus.push_back(*e.label);
    for (const TestCase& tc : cases)
        corpus.push_back(tc.label);
    corpus_size = corpus.size();
    return gbc::build_branch_table(corpus);
}

// Encode every test case, retrieve its first hit and score the label pair.
// Slot-indexed results keep the reduction order fixed for any thread count.
std::vector<CaseResult> score_cases(const gbc::BarcodeIndex& index,
                                    const std::vector<TestCase>& cases,
                                    const EncodeOptions& enc, const gbc::BranchTable& table,
                                    unsigned threads) {
    std::vector<CaseResult> results(cases.size());
    gbc::parallel_for(cases.size(), threads, [&](std::size_t i) {
        const TestCase& tc = cases[i];
        CaseResult& r = results[i];

        const Clock::time_point t0 = Clock::now();
        const gbc::Barcode probe = encode_image(tc.image, enc);
        r.encode_ms = ms_since(t0);

        const Clock::time_point t1 = Clock::now();
        const std::vector<gbc::QueryHit> hits = gbc::query(index, probe, 1);
        r.query_ms = ms_since(t1);

        const gbc::IndexEntry& hit = index.entries[hits[0].entry_index];
        if (!hit.label)
            throw gbc::format_error("retrieved entry '" + hit.image_id +
                                    "' has no label; evaluation needs a labeled index");
        r.hit_id = hit.image_id;
        r.similarity = hits[0].similarity;
        r.axis_error = gbc::pair_error_by_axis(tc.label, *hit.label, table);
        r.exact = (*hit.label == tc.label);
    });
    return results;
}

int run_evaluate(const EvaluateCmd& cmd) {
    if (!cmd.replay_path.empty())
        return run_replay(cmd);

    const gbc::BarcodeIndex index = gbc::load_index(cmd.index_path);
    EncodeOptions enc = cmd.enc;
    apply_tag(enc, cmd.set, index.config_tag);

    const std::vector<TestCase> cases = load_test_cases(cmd);

    gbc::BranchTable table;
    std::string table_source;
    if (!cmd.branch_table_path.empty()) {
        table = gbc::load_branch_table(cmd.branch_table_path);
        table_source = "loaded from " + cmd.branch_table_path;
    } else {
        std::size_t corpus_size = 0;
        table = derive_branch_table(index, cases, corpus_size);
        table_source = "derived from " + std::to_string(corpus_size) + " labels";
    }

    const std::vector<CaseResult> results = score_cases(index, cases, enc, table, cmd.threads);

    std::array<double, 4> axis_totals{};
    double e_total = 0.0;
    std::size_t exact = 0;
    std::vector<double> encode_times, query_times;
    for (const CaseResult& r : results) {
        for (std::size_t a = 0; a < 4; ++a)
            axis_totals[a] += r.axis_error[a];
        e_total += r.axis_error[0] + r.axis_error[1] + r.axis_error[2] + r.axis_error[3];
        exact += r.exact ? 1 : 0;
        encode_times.push_back(r.encode_ms);
        query_times.push_back(r.query_ms);
    }
    const double exact_rate = static_cast<double>(exact) / static_cast<double>(results.size());

    std::string eta_text = "n/a (pass --emax and --lmax)";
    if (cmd.emax > 0.0 && cmd.lmax > 0.0) {
        if (e_total > 0.0)
            eta_text = format_double(
                gbc::eta_suitability(e_total, static_cast<double>(index.code_length), cmd.emax,
                                     cmd.lmax),
                8);
        else
            eta_text = "n/a (E_total is zero)";
    }

    static constexpr std::array<const char*, 4> axis_names{"technical", "directional",
                                                           "anatomical", "biological"};
    std::ostringstream table_out;
    table_out << "evaluated " << results.size() << " test images against " << index.entries.size()
              << " indexed (" << index.config_tag << ", " << index.code_length << " bits)\n"
              << "branch table:         " << table_source << "\n"
              << "E_total:              " << format_double(e_total, 6) << "\n";
    for (std::size_t a = 0; a < 4; ++a)
        table_out << "  " << axis_names[a] << " axis:" << std::string(14 - std::string(axis_names[a]).size(), ' ')
                  << format_double(axis_totals[a], 6) << "\n";
    table_out << "first-hit exact rate: " << format_double(100.0 * exact_rate, 2) << "% (" << exact
              << "/" << results.size() << ")\n"
              << "median encode time:   " << format_double(gbc::detail::median_of(encode_times), 3)
              << " ms\n"
              << "median query time:    " << format_double(gbc::detail::median_of(query_times), 3)
              << " ms\n"
              << "eta:                  " << eta_text << "\n";

    std::ostringstream csv;
    csv << "image_id,hit_id,similarity,pair_error,exact\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
        const CaseResult& r = results[i];
        const double pe = r.axis_error[0] + r.axis_error[1] + r.axis_error[2] + r.axis_error[3];
        csv << cases[i].image_id << "," << r.hit_id << "," << format_double(r.similarity, 6) << ","
            << format_double(pe, 6) << "," << (r.exact ? 1 : 0) << "\n";
    }

    std::cout << (cmd.format == "csv" ? csv.str() : table_out.str());
    if (!cmd.out_path.empty())
        write_text_file(cmd.out_path, csv.str());
    return 0;
}

// ---------------------------------------------------------------------------
// bench

struct BenchCmd {
    std::string manifest_path;
    std::string test_manifest;
    std::string out_path;
    std::string format = "text";
    std::string root;
    std::vector<int> scales, orients, windows, angles;
    bool skip_bad = false;
    unsigned threads = 1;
    double emax = 0.0;
    double lmax = 0.0;
    EncodeOptions base; // size, fmax, sigma-f, gamma, d1/d2, bins, ... shared by all cells
};

struct BenchCell {
    std::string method;
    bool failed = false;
    std::string error;
    double e_total = 0.0;
    long l_code = 0;
    double exact_rate = 0.0;
    double median_encode_ms = 0.0;
    double eta = 0.0;
};

struct LabeledImage {
    std::string image_id;
    gbc::GrayImage image;
    std::optional<gbc::IrmaCode> label;
};

std::vector<LabeledImage> preload(const std::string& manifest, const std::string& root,
                                  int size, bool skip_bad, bool require_label) {
    std::vector<LabeledImage> images;
    for (const gbc::ManifestRow& row : gbc::read_manifest(manifest)) {
        try {
            LabeledImage li;
            li.image_id = row.image_id;
            if (!row.irma_code.empty())
                li.label = gbc::parse_irma(row.irma_code);
            else if (require_label)
                throw gbc::format_error("row '" + row.image_id + "' has no label");
            // Normalizing once up front is safe: every cell shares --size, and
            // re-normalizing an already-sized image is the identity.
            li.image = gbc::normalize(gbc::load_image(resolve(root, row.path).string()), size, size);
            images.push_back(std::move(li));
        } catch (const std::exception& e) {
            if (!skip_bad)
                throw;
            std::cerr << "warning: skipped " << row.image_id << ": " << e.what() << "\n";
        }
    }
    if (images.empty())
        throw gbc::format_error("no usable rows in " + manifest);
    return images;
}

BenchCell run_cell(const std::string& method, const EncodeOptions& enc,
                   const std::vector<LabeledImage>& train, const std::vector<TestCase>& tests,
                   const gbc::BranchTable& table, unsigned threads) {
    BenchCell cell;
    cell.method = method;
    try {
        std::vector<gbc::IndexEntry> entries(train.size());
        gbc::parallel_for(train.size(), threads, [&](std::size_t i) {
            entries[i].image_id = train[i].image_id;
            entries[i].label = train[i].label;
            entries[i].barcode = encode_image(train[i].image, enc);
        });
        const gbc::BarcodeIndex index = gbc::build_index(std::move(entries));

        const std::vector<CaseResult> results = score_cases(index, tests, enc, table, threads);
        std::vector<double> encode_times;
        std::size_t exact = 0;
        for (const CaseResult& r : results) {
            cell.e_total += r.axis_error[0] + r.axis_error[1] + r.axis_error[2] + r.axis_error[3];
            exact += r.exact ? 1 : 0;
            encode_times.push_back(r.encode_ms);
        }
        cell.l_code = static_cast<long>(index.code_length);
        cell.exact_rate = static_cast<double>(exact) / static_cast<double>(results.size());
        cell.median_encode_ms = gbc::detail::median_of(encode_times);
    } catch (const std::exception& e) {
        cell.failed = true;
        cell.error = e.what();
    }
    return cell;
}

int run_bench(const BenchCmd& cmd) {
    const bool have_gbc = !cmd.scales.empty() && !cmd.orients.empty() && !cmd.windows.empty();
    const bool have_rbc = !cmd.angles.empty();
    if (!have_gbc && !have_rbc) {
        std::cerr << "error: empty grid; pass --scales/--orients/--windows and/or --angles\n";
        return 1;
    }

    const std::vector<LabeledImage> train =
        preload(cmd.manifest_path, cmd.root, cmd.base.size, cmd.skip_bad, true);
    const std::vector<LabeledImage> raw_tests =
        preload(cmd.test_manifest, cmd.root, cmd.base.size, cmd.skip_bad, true);
    std::vector<TestCase> tests;
    for (const LabeledImage& li : raw_tests)
        tests.push_back({li.image_id, li.image, *li.label});

    std::vector<gbc::IrmaCode> corpus;
    for (const LabeledImage& li : train)
        corpus.push_back(*li.label);
    for (const TestCase& tc : tests)
        corpus.push_back(tc.label);
    const gbc::BranchTable table = gbc::build_branch_table(corpus);

    std::vector<BenchCell> cells;
    for (int u : cmd.scales) {
        for (int v : cmd.orients) {
            for (int w : cmd.windows) {
                EncodeOptions enc = cmd.base;
                enc.kind = "gbc";
                enc.bank.scales = u;
                enc.bank.orientations = v;
                enc.bank.window_rows = w;
                enc.bank.window_cols = w;
                cells.push_back(run_cell(gbc::gbc_config_tag(enc.bank), enc, train, tests, table,
                                         cmd.threads));
            }
        }
    }
    for (int a : cmd.angles) {
        EncodeOptions enc = cmd.base;
        enc.kind = "rbc";
        enc.radon.n_angles = a;
        cells.push_back(
            run_cell(gbc::rbc_config_tag(enc.radon), enc, train, tests, table, cmd.threads));
    }

    // Suitability uses the worst error and longest code over the sweep unless
    // explicit maxima are given. Zero-error cells get an unbounded score.
    double e_max = cmd.emax, l_max = cmd.lmax;
    if (!(e_max > 0.0 && l_max > 0.0)) {
        e_max = 0.0;
        l_max = 0.0;
        for (const BenchCell& c : cells) {
            if (c.failed)
                continue;
            e_max = std::max(e_max, c.e_total);
            l_max = std::max(l_max, static_cast<double>(c.l_code));
        }
    }
    for (BenchCell& c : cells) {
        if (c.failed)
            continue;
        c.eta = (c.e_total > 0.0 && c.l_code > 0 && e_max > 0.0)
                    ? (e_max * l_max) / (c.e_total * static_cast<double>(c.l_code))
                    : std::numeric_limits<double>::infinity();
    }

    std::vector<std::size_t> ok;
    for (std::size_t i = 0; i < cells.size(); ++i)
        if (!cells[i].failed)
            ok.push_back(i);
    std::vector<std::size_t> by_error = ok, by_eta = ok;
    std::stable_sort(by_error.begin(), by_error.end(), [&](std::size_t a, std::size_t b) {
        return cells[a].e_total < cells[b].e_total;
    });
    std::stable_sort(by_eta.begin(), by_eta.end(),
                     [&](std::size_t a, std::size_t b) { return cells[a].eta > cells[b].eta; });

    auto eta_text = [](const BenchCell& c) {
        return std::isinf(c.eta) ? std::string("inf") : format_double(c.eta, 6);
    };

    std::ostringstream table_out;
    table_out << "swept " << cells.size() << " configurations over " << train.size()
              << " indexed / " << tests.size() << " test images\n\n"
              << "ranked by E_total (lower is better):\n";
    for (std::size_t i : by_error) {
        const BenchCell& c = cells[i];
        table_out << "  " << c.method << "  E_total=" << format_double(c.e_total, 6)
                  << "  L_code=" << c.l_code << "  eta=" << eta_text(c)
                  << "  exact=" << format_double(100.0 * c.exact_rate, 1) << "%"
                  << "  encode=" << format_double(c.median_encode_ms, 3) << "ms\n";
    }
    table_out << "\nranked by eta (higher is better):\n";
    for (std::size_t i : by_eta)
        table_out << "  " << cells[i].method << "  eta=" << eta_text(cells[i]) << "\n";
    bool any_failed = false;
    for (const BenchCell& c : cells) {
        if (!c.failed)
            continue;
        if (!any_failed)
            table_out << "\nfailed cells:\n";
        any_failed = true;
        table_out << "  " << c.method << ": " << c.error << "\n";
    }

    std::ostringstream csv;
    csv << "method,e_total,l_code,eta,exact_rate,median_encode_ms,status\n";
    for (std::size_t i : by_error) {
        const BenchCell& c = cells[i];
        csv << c.method << "," << format_double(c.e_total, 6) << "," << c.l_code << ","
            << eta_text(c) << "," << format_double(c.exact_rate, 4) << ","
            << format_double(c.median_encode_ms, 3) << ",ok\n";
    }
    for (const BenchCell& c : cells)
        if (c.failed)
            csv << c.method << ",,,,,,failed: " << c.error << "\n";

    std::cout << (cmd.format == "csv" ? csv.str() : table_out.str());
    if (!cmd.out_path.empty())
        write_text_file(cmd.out_path, csv.str());
    return 0;
}

// ---------------------------------------------------------------------------

template <typename Fn>
int guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const gbc::io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const gbc::format_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"content-based image barcodes: encode, index, query, evaluate, sweep"};
    app.require_subcommand(1);

    EncodeCmd encode_cmd;
    CLI::App* encode_app = app.add_subcommand("encode", "encode one image to a barcode");
    encode_app->add_option("image", encode_cmd.image_path, "input image (PGM or PNG)")->required();
    add_encode_options(encode_app, encode_cmd.enc);
    encode_app->add_option("--out", encode_cmd.out_path, "write output here instead of stdout");
    encode_app->add_option("--format", encode_cmd.format, "text, csv or binary")
        ->check(CLI::IsMember({"text", "csv", "binary"}));
    encode_app->add_flag("--text", encode_cmd.tag_form, "prefix the bit string with its config tag");

    IndexCmd index_cmd;
    CLI::App* index_app = app.add_subcommand("index", "encode a manifest of images into an index file");
    index_app->add_option("--manifest", index_cmd.manifest_path, "CSV: image_id,path[,irma_code]")
        ->required();
    index_app->add_option("--out", index_cmd.out_path, "index file to write")->required();
    index_app->add_option("--root", index_cmd.root, "directory manifest paths are relative to");
    index_app->add_flag("--skip-bad", index_cmd.skip_bad, "warn and continue past rows that fail");
    index_app->add_flag("--append", index_cmd.append, "add entries to an existing index file");
    index_app->add_option("--threads", index_cmd.threads, "worker threads (default 1)")
        ->check(CLI::Range(1, 1024));
    add_encode_options(index_app, index_cmd.enc);

    QueryCmd query_cmd;
    CLI::App* query_app = app.add_subcommand("query", "rank index entries against a probe image");
    query_app->add_option("--index", query_cmd.index_path, "index file")->required();
    query_app->add_option("--image", query_cmd.image_path, "probe image")->required();
    query_app->add_option("--topk,-k", query_cmd.topk, "results to print (default 5)")
        ->check(CLI::Range(1, 1000000));
    query_app->add_option("--out", query_cmd.out_path, "also write the listing here");
    query_app->add_option("--format", query_cmd.format, "text or csv")
        ->check(CLI::IsMember({"text", "csv"}));
    add_encode_options(query_app, query_cmd.enc);

    EvaluateCmd eval_cmd;
    CLI::App* eval_app =
        app.add_subcommand("evaluate", "retrieve first hits for a labeled test set and score them");
    eval_app->add_option("--index", eval_cmd.index_path, "labeled index file");
    eval_app->add_option("--test-manifest", eval_cmd.test_manifest,
                         "CSV of labeled probe images: image_id,path,irma_code");
    eval_app->add_option("--branch-table", eval_cmd.branch_table_path,
                         "per-position branching factors (default: derived from labels)");
    eval_app->add_option("--replay", eval_cmd.replay_path,
                         "skip retrieval; rank stored method,e_total,l_code rows by eta");
    eval_app->add_option("--root", eval_cmd.root, "directory manifest paths are relative to");
    eval_app->add_option("--out", eval_cmd.out_path, "write the per-image CSV here");
    eval_app->add_option("--format", eval_cmd.format, "stdout form: text or csv")
        ->check(CLI::IsMember({"text", "csv"}));
    eval_app->add_flag("--skip-bad", eval_cmd.skip_bad, "warn and continue past rows that fail");
    eval_app->add_option("--threads", eval_cmd.threads, "worker threads (default 1)")
        ->check(CLI::Range(1, 1024));
    eval_app->add_option("--emax", eval_cmd.emax, "worst-case total error for eta");
    eval_app->add_option("--lmax", eval_cmd.lmax, "longest code length for eta");
    add_encode_options(eval_app, eval_cmd.enc);

    BenchCmd bench_cmd;
    CLI::App* bench_app =
        app.add_subcommand("bench", "sweep descriptor configurations and rank them");
    bench_app->add_option("--manifest", bench_cmd.manifest_path, "labeled index manifest")
        ->required();
    bench_app->add_option("--test-manifest", bench_cmd.test_manifest, "labeled probe manifest")
        ->required();
    bench_app->add_option("--root", bench_cmd.root, "directory manifest paths are relative to");
    bench_app->add_option("--scales", bench_cmd.scales, "scale counts to sweep, e.g. 5,8")
        ->delimiter(',');
    bench_app->add_option("--orients", bench_cmd.orients, "orientation counts to sweep")
        ->delimiter(',');
    bench_app->add_option("--windows", bench_cmd.windows, "square window sizes to sweep")
        ->delimiter(',');
    bench_app->add_option("--angles", bench_cmd.angles, "projection-angle counts to sweep")
        ->delimiter(',');
    bench_app->add_option("--bins", bench_cmd.base.radon.bins, "samples per projection (default 128)");
    bench_app->add_option("--size", bench_cmd.base.size, "normalized image side (default 32)");
    bench_app->add_option("--fmax", bench_cmd.base.bank.f_max, "finest-scale frequency");
    bench_app->add_option("--sigma-f", bench_cmd.base.bank.sigma_f, "envelope width times frequency");
    bench_app->add_option("--gamma", bench_cmd.base.bank.gamma, "envelope minor-axis weight");
    bench_app->add_option("--eta-aspect", bench_cmd.base.bank.eta_aspect, "normalization aspect term");
    bench_app->add_option("--phi", bench_cmd.base.bank.phi, "carrier phase offset");
    bench_app->add_option("--d1", bench_cmd.base.down.d1, "downsampling factor along columns");
    bench_app->add_option("--d2", bench_cmd.base.down.d2, "downsampling factor along rows");
    bench_app->add_flag("--block-mean", bench_cmd.base.block_mean, "average blocks when downsampling");
    bench_app->add_option("--out", bench_cmd.out_path, "write the sweep CSV here");
    bench_app->add_option("--format", bench_cmd.format, "stdout form: text or csv")
        ->check(CLI::IsMember({"text", "csv"}));
    bench_app->add_flag("--skip-bad", bench_cmd.skip_bad, "warn and continue past rows that fail");
    bench_app->add_option("--threads", bench_cmd.threads, "worker threads (default 1)")
        ->check(CLI::Range(1, 1024));
    bench_app->add_option("--emax", bench_cmd.emax, "fixed worst-case error for eta");
    bench_app->add_option("--lmax", bench_cmd.lmax, "fixed longest code for eta");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    if (app.got_subcommand(encode_app)) {
        if (encode_cmd.format == "binary" && encode_cmd.out_path.empty()) {
            std::cerr << "error: --format binary requires --out\n";
            return 1;
        }
        return guarded([&] { return run_encode(encode_cmd); });
    }
    if (app.got_subcommand(index_app)) {
        index_cmd.set = read_explicit(index_app);
        return guarded([&] { return run_index(index_cmd); });
    }
    if (app.got_subcommand(query_app)) {
        query_cmd.set = read_explicit(query_app);
        return guarded([&] { return run_query(query_cmd); });
    }
    if (app.got_subcommand(eval_app)) {
        eval_cmd.set = read_explicit(eval_app);
        if (eval_cmd.replay_path.empty() &&
            (eval_cmd.index_path.empty() || eval_cmd.test_manifest.empty())) {
            std::cerr << "error: evaluate needs --index and --test-manifest (or --replay)\n";
            return 1;
        }
        return guarded([&] { return run_evaluate(eval_cmd); });
    }
    if (app.got_subcommand(bench_app))
        return guarded([&] { return run_bench(bench_cmd); });

    return 1;
}
