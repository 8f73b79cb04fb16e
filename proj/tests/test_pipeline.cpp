#include <gtest/gtest.h>

#include <cstdlib>
#include <map>

#include "test_support.hpp"
#include "v6forge/pipeline.hpp"

using namespace v6forge;
using namespace v6forge::testing;
namespace fs = std::filesystem;

namespace {

const std::string kData = V6FORGE_SOURCE_DIR "/data";

PipelineConfig small_config(const TempDir& dir, std::uint64_t rng_seed = 1) {
    PipelineConfig cfg;
    cfg.seed_file = kData + "/seed.txt";
    cfg.scan_path = kData + "/population.conf";
    cfg.blocklist_file = kData + "/blocklist.txt";
    cfg.injection_prefix_file = kData + "/injection_prefixes.txt";
    cfg.algorithms = {"dense", "entropy"};
    cfg.categories = {"Full", "ISP"};
    cfg.budget = 5000;
    cfg.rng_seed = rng_seed;
    cfg.out_dir = dir.path() / "out";
    return cfg;
}

std::map<std::string, std::string> tree_contents(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_file(e.path().string());
    return out;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(V6FORGE_CLI) + " " + args + " 2>/dev/null";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& line : read_lines(path)) {
        if (trim(line).empty()) continue;
        std::vector<std::string> cols;
        for (auto c : split(line, ',')) cols.emplace_back(c);
        rows.push_back(std::move(cols));
    }
    return rows;
}

} // namespace

TEST(ValidateConfig, ValidIsEmpty) {
    TempDir dir;
    EXPECT_TRUE(validate_config(small_config(dir)).empty());
}

TEST(ValidateConfig, MissingBlocklistNamesField) {
    TempDir dir;
    auto cfg = small_config(dir);
    cfg.blocklist_file = dir.path() / "nope.txt";
    const auto f = validate_config(cfg);
    ASSERT_EQ(f.size(), 1u);
    EXPECT_EQ(f[0].field, "blocklist_file");
}

TEST(ValidateConfig, ZeroBudget) {
    TempDir dir;
    auto cfg = small_config(dir);
    cfg.budget = 0;
    const auto f = validate_config(cfg);
    ASSERT_EQ(f.size(), 1u);
    EXPECT_EQ(f[0].field, "budget");
}

TEST(ValidateConfig, CollectsEveryProblem) {
    TempDir dir;
    auto cfg = small_config(dir);
    cfg.algorithms = {"dense", "6Magic"};
    cfg.categories = {"Unknown", "Full"};
    cfg.seed_file.clear();
    cfg.scan_source = ScanSourceKind::Import;
    EXPECT_EQ(validate_config(cfg).size(), 5u);  // algorithm, category, seed, rib, categories
}

TEST(PipelineConfigFile, ParsesRelativePaths) {
    const auto cfg = load_pipeline_config(kData + "/pipeline.conf");
    EXPECT_EQ(cfg.seed_file, fs::path(kData) / "seed.txt");
    EXPECT_EQ(cfg.scan_source, ScanSourceKind::Simulate);
    EXPECT_EQ(cfg.categories.size(), 6u);
    EXPECT_EQ(cfg.algorithms, (std::vector<std::string>{"dense", "entropy"}));
    EXPECT_TRUE(validate_config(cfg).empty());
    EXPECT_THROW(parse_pipeline_config("[pipeline]\nbogus = 1\n"), Error);
    EXPECT_THROW(parse_pipeline_config("[pipeline]\nscan_source = live:x\n"), Error);
}

TEST(Pipeline, EmptySeedRunsNoCells) {
    TempDir dir;
    write_file(dir.file("empty.txt"), "");
    auto cfg = small_config(dir);
    cfg.seed_file = dir.file("empty.txt");
    Logger log = Logger::silent();
    const auto out = run_pipeline(cfg, log);
    EXPECT_TRUE(out.cells.empty());
    EXPECT_EQ(out.warnings.size(), 1u);
    EXPECT_EQ(csv_rows((cfg.out_dir / "manifest.csv").string()).size(), 1u);

    write_file(dir.file("p.conf"), "[pipeline]\nseed_file = empty.txt\nscan_source = simulate:" + kData +
                                       "/population.conf\nout_dir = o\nalgorithms = dense\n");
    EXPECT_EQ(run_cli("pipeline --config " + dir.file("p.conf")), 0);
}

TEST(Pipeline, StageCountsNonIncreasing) {
    TempDir dir;
    const auto cfg = small_config(dir);
    Logger log = Logger::silent();
    const auto out = run_pipeline(cfg, log);
    ASSERT_EQ(out.cells.size(), 6u);  // 2 algorithms x 2 labels + 2 Combined
    EXPECT_EQ(out.failed(), 0);
    const auto rows = csv_rows((cfg.out_dir / "manifest.csv").string());
    ASSERT_EQ(rows.size(), 7u);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        std::vector<long> n;
        for (int c = 4; c <= 9; ++c) n.push_back(std::stol(rows[i][c]));
        for (std::size_t k = 1; k < n.size(); ++k) EXPECT_LE(n[k], n[k - 1]) << rows[i][0] << "/" << rows[i][1];
        if (rows[i][0] != "Combined") EXPECT_LE(n[0], static_cast<long>(cfg.budget));
    }
    for (const char* f : {"candidates_raw.txt", "candidates_raw.txt.meta", "candidates_blocklisted.txt",
                          "aliased_verdicts.csv", "candidates.txt", "scan.csv", "scan.probed", "responsive.txt"})
        EXPECT_TRUE(fs::exists(cfg.out_dir / "cells" / "dense_ISP" / f)) << f;
    // Report CSV lists every cell.
    const auto report = parse_report_csv(read_file((cfg.out_dir / "report.csv").string()));
    std::set<std::string> labels;
    for (const auto& r : report) labels.insert(r.label);
    EXPECT_EQ(labels.size(), 6u);
}

TEST(Pipeline, DeterministicAcrossRunsAndJobs) {
    TempDir a, b, c;
    Logger log = Logger::silent();
    auto ca = small_config(a);
    auto cb = small_config(b);
    cb.jobs = 3;
    run_pipeline(ca, log);
    run_pipeline(cb, log);
    const auto ta = tree_contents(ca.out_dir), tb = tree_contents(cb.out_dir);
    EXPECT_EQ(ta, tb);

    const auto cc = small_config(c, 2);
    run_pipeline(cc, log);
    const auto tc = tree_contents(cc.out_dir);
    EXPECT_NE(ta.at("cells/entropy_Full/candidates_raw.txt"), tc.at("cells/entropy_Full/candidates_raw.txt"));
    EXPECT_EQ(ta.at("seeds/Full.txt"), tc.at("seeds/Full.txt"));
}

TEST(Pipeline, FailingCellIsIsolated) {
    TempDir dir;
    // ISP-only seed: the NonProfit cell has nothing to learn from.
    AddressList isp;
    for (const Address& a : read_address_list(kData + "/seed.txt"))
        if (parse_prefix("2a02:1000::/32").contains(a)) isp.push_back(a);
    write_address_list(dir.file("seed.txt"), isp);
    auto cfg = small_config(dir);
    cfg.seed_file = dir.file("seed.txt");
    cfg.algorithms = {"dense"};
    cfg.categories = {"ISP", "NonProfit"};
    Logger log = Logger::silent();
    const auto out = run_pipeline(cfg, log);
    ASSERT_EQ(out.cells.size(), 2u);
    EXPECT_TRUE(out.cells[0].ok);
    EXPECT_FALSE(out.cells[1].ok);
    EXPECT_FALSE(fs::exists(cfg.out_dir / "cells" / "dense_NonProfit"));
    EXPECT_TRUE(fs::exists(cfg.out_dir / "cells" / "dense_ISP" / "responsive.txt"));
    const auto rows = csv_rows((cfg.out_dir / "manifest.csv").string());
    EXPECT_EQ(rows[2][2], "failed");
}

TEST(Cli, ExitCodes) {
    TempDir dir;
    EXPECT_EQ(run_cli("validate --config " + kData + "/pipeline.conf"), 0);
    write_file(dir.file("bad.conf"), "[pipeline]\nbudget = 0\nseed_file = missing.txt\n");
    EXPECT_EQ(run_cli("validate --config " + dir.file("bad.conf")), 1);
    EXPECT_EQ(run_cli("pipeline --config " + dir.file("bad.conf")), 1);
    EXPECT_NE(run_cli("no-such-command"), 0);

    AddressList isp;
    for (const Address& a : read_address_list(kData + "/seed.txt"))
        if (parse_prefix("2a02:1000::/32").contains(a)) isp.push_back(a);
    write_address_list(dir.file("seed.txt"), isp);
    write_file(dir.file("p.conf"), "[pipeline]\nseed_file = seed.txt\nscan_source = simulate:" + kData +
                                       "/population.conf\nout_dir = o\nalgorithms = dense\ncategories = ISP,NonProfit\n"
                                       "budget = 1000\n");
    EXPECT_EQ(run_cli("pipeline --config " + dir.file("p.conf")), 2);
}

TEST(Cli, SubcommandsEndToEnd) {
    TempDir dir;
    const std::string d = dir.path().string();
    const std::string pop = kData + "/population.conf";
    ASSERT_EQ(run_cli("simulate --population " + pop + " --out-dir " + d + "/sim --seed-sample 2000 --seed-out " + d +
                      "/seed.txt --history-out " + d + "/hist --snapshots 30 --start 2023-01-02 --cadence 7"),
              0);
    ASSERT_EQ(run_cli("categorize --rib " + d + "/sim/rib.csv --categories " + d + "/sim/categories.csv --input " + d +
                      "/seed.txt --out-dir " + d + "/cat"),
              0);
    EXPECT_TRUE(fs::exists(d + "/cat/summary.csv"));
    EXPECT_TRUE(fs::exists(d + "/cat/ISP.txt"));

    ASSERT_EQ(run_cli("stability --history " + d + "/hist --analysis-date 2023-08-01 --rib " + d +
                      "/sim/rib.csv --categories " + d + "/sim/categories.csv --out " + d + "/stab.csv --summary " + d +
                      "/stab_summary.csv"),
              0);
    const auto stab = csv_rows(d + "/stab.csv");
    ASSERT_GT(stab.size(), 1u);
    EXPECT_EQ(stab[0], (std::vector<std::string>{"address", "category", "first_seen", "state_changes", "uptime_days",
                                                 "downtime_days"}));

    ASSERT_EQ(run_cli("generate --algo dense --seed-file " + d + "/seed.txt --budget 3000 --rng-seed 4 --label Full --out " +
                      d + "/cand_raw.txt"),
              0);
    EXPECT_TRUE(fs::exists(d + "/cand_raw.txt.meta"));
    const auto raw = read_address_list(d + "/cand_raw.txt");
    EXPECT_LE(raw.size(), 3000u);

    ASSERT_EQ(run_cli("filter --input " + d + "/cand_raw.txt --blocklist " + kData + "/blocklist.txt --apd --population " +
                      pop + " --out " + d + "/cand.txt"),
              0);
    const auto cand = read_address_list(d + "/cand.txt");
    EXPECT_LE(cand.size(), raw.size());

    ASSERT_EQ(run_cli("simulate --population " + pop + " --targets " + d + "/cand.txt --scan-out " + d + "/scan.csv"), 0);
    EXPECT_TRUE(fs::exists(d + "/scan.probed"));

    ASSERT_EQ(run_cli("evaluate --candidates " + d + "/cand.txt --raw-candidates " + d + "/cand_raw.txt --seed " + d +
                      "/seed.txt --scan " + d + "/scan.csv --rib " + d + "/sim/rib.csv --categories " + d +
                      "/sim/categories.csv --aliased " + d + "/sim/aliased.txt --injection-prefixes " + kData +
                      "/injection_prefixes.txt --algorithm dense --seed-label Full --format csv --out " + d + "/report.csv"),
              0);
    const auto rows = parse_report_csv(read_file(d + "/report.csv"));
    ASSERT_FALSE(rows.empty());
    EXPECT_EQ(rows[0].metric, "candidate_count");
    EXPECT_EQ(rows[0].value, static_cast<double>(cand.size()));

    ASSERT_EQ(run_cli("evaluate --candidates " + d + "/cand.txt --seed " + d + "/seed.txt --scan " + d +
                      "/scan.csv --rib " + d + "/sim/rib.csv --categories " + d +
                      "/sim/categories.csv --format markdown --expected-generation-factor 99 --out " + d + "/report.md"),
              0);
    EXPECT_NE(read_file(d + "/report.md").find("Notes:"), std::string::npos);
}

TEST(Cli, GfwFilterOnDnsResponses) {
    TempDir dir;
    const std::string d = dir.path().string();
    write_file(d + "/in.txt", "240e::1\n2a00::1\n2a00::2\n");
    write_file(d + "/dns.csv", "responder,query_name,answers\n240e::1,www.google.com,2001::808:808\n"
                               "2a00::1,www.google.com,2a00:1450:4001::93\n");
    ASSERT_EQ(run_cli("filter --input " + d + "/in.txt --gfw --dns-responses " + d + "/dns.csv --out " + d + "/out.txt"), 0);
    EXPECT_EQ(read_address_list(d + "/out.txt"), (AddressList{parse_address("2a00::1"), parse_address("2a00::2")}));
}
