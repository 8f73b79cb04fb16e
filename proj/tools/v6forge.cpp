// v6forge command line front-end.
//
// Exit codes: 0 success (warnings allowed), 1 invalid input/config, 2 at
// least one pipeline cell failed.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "v6forge/v6forge.hpp"

namespace fs = std::filesystem;
using namespace v6forge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitCellFailed = 2;

struct Globals {
    std::string config;
    int jobs = 1;
    std::optional<std::uint64_t> rng_seed;
};

Day require_date(const std::string& s, const char* flag) {
    const auto d = parse_date(s);
    if (!d) throw Error(Errc::ConfigInvalid, std::string(flag) + ": expected YYYY-MM-DD, got '" + s + "'");
    return *d;
}

int cmd_categorize(const std::string& rib_file, const std::string& cat_file, const std::string& input,
                   const std::string& out_dir, Logger& log) {
    const PrefixTable rib = load_rib(rib_file);
    if (rib.stats().malformed)
        log.log("warn", "rib_malformed_rows", {{"count", std::to_string(rib.stats().malformed)}});
    const CategoryMap cats = load_categories(cat_file);
    const AddressList addrs = read_address_list(input);
    const auto parts = split_by_category(addrs, rib, cats);
    fs::create_directories(out_dir);
    std::string summary = "category,count,share\n";
    for (NetworkCategory c : kAllCategories) {
        auto it = parts.find(c);
        const std::size_t n = it == parts.end() ? 0 : it->second.size();
        if (it != parts.end()) write_address_list((fs::path(out_dir) / (std::string(to_string(c)) + ".txt")).string(), it->second);
        const double share = addrs.empty() ? 0.0 : static_cast<double>(n) / static_cast<double>(addrs.size());
        summary += std::string(to_string(c)) + "," + std::to_string(n) + "," + format_double(share) + "\n";
    }
    write_file((fs::path(out_dir) / "summary.csv").string(), summary);
    log.log("info", "categorized", {{"addresses", std::to_string(addrs.size())}, {"categories", std::to_string(parts.size())}});
    return kExitOk;
}

int cmd_stability(const std::string& history_dir, const std::string& analysis, long window, const std::string& rib_file,
                  const std::string& cat_file, bool count_trailing, const std::string& out, const std::string& summary_out,
                  Logger& log) {
    HistoryLoadStats stats;
    const ScanHistory h = load_history(history_dir, require_date(analysis, "--analysis-date"), &stats);
    if (stats.malformed) log.log("warn", "history_malformed_rows", {{"count", std::to_string(stats.malformed)}});
    std::optional<PrefixTable> rib;
    CategoryMap cats;
    if (!rib_file.empty()) rib = load_rib(rib_file);
    if (!cat_file.empty()) cats = load_categories(cat_file);
    const StabilityOptions opts{count_trailing};

    std::string csv = "address,category,first_seen,state_changes,uptime_days,downtime_days\n";
    std::size_t kept = 0;
    for (const auto& [a, r] : stability_all(h, opts)) {
        if (!eligible(r, h.analysis_date(), window)) continue;
        ++kept;
        const NetworkCategory c = rib ? categorize(a, *rib, cats) : NetworkCategory::Unknown;
        csv += format_address(a) + "," + std::string(to_string(c)) + "," + format_date(r.first_seen) + "," +
               std::to_string(r.state_changes) + "," + std::to_string(r.uptime_days) + "," +
               std::to_string(r.downtime_days) + "\n";
    }
    write_file(out, csv);
    if (!summary_out.empty()) {
        const PrefixTable empty_rib;
        const auto by_cat = stability_by_category(h, rib ? *rib : empty_rib, cats, window, opts);
        std::string s = "category,metric,count,min,q1,median,q3,max\n";
        for (const auto& [c, st] : by_cat) {
            auto row = [&](const char* metric, const Summary& m) {
                s += std::string(to_string(c)) + "," + metric + "," + std::to_string(st.count) + "," +
                     format_double(m.min) + "," + format_double(m.q1) + "," + format_double(m.median) + "," +
                     format_double(m.q3) + "," + format_double(m.max) + "\n";
            };
            row("state_changes", st.state_changes);
            row("uptime_days", st.uptime_days);
            row("downtime_days", st.downtime_days);
        }
        write_file(summary_out, s);
    }
    log.log("info", "stability_done", {{"snapshots", std::to_string(h.snapshots().size())}, {"eligible", std::to_string(kept)}});
    return kExitOk;
}

struct FilterArgs {
    std::string blocklist, known_aliased, injection, dns_responses, population, input, out;
    bool apd = false, gfw = false;
    int probes = 16;
    std::uint64_t seed = 0;
};

int cmd_filter(const FilterArgs& a, Logger& log) {
    AddressList addrs = read_address_list(a.input);
    const std::size_t before = addrs.size();
    if (!a.blocklist.empty()) addrs = apply_blocklist(addrs, Blocklist(read_prefix_list(a.blocklist)));
    const std::size_t after_block = addrs.size();

    std::vector<AliasVerdict> verdicts;
    if (a.apd) {
        if (a.population.empty())
            throw Error(Errc::ConfigInvalid, "--apd needs a prober; pass --population <conf> for simulated probing");
        const auto gt = sim::build_population(sim::load_population(a.population));
        verdicts = detect_aliased([&](const Address& x) { return gt.probe(x, Protocol::ICMP); },
                                  alias_candidates(addrs, 64), a.probes, a.seed);
        std::string csv = "prefix,aliased,probes_sent,probes_answered\n";
        for (const auto& v : verdicts)
            csv += format_prefix(v.prefix) + "," + (v.aliased ? "true" : "false") + "," + std::to_string(v.probes_sent) +
                   "," + std::to_string(v.probes_answered) + "\n";
        write_file(a.out + ".aliased.csv", csv);
    }
    std::vector<Prefix> known;
    if (!a.known_aliased.empty()) known = read_prefix_list(a.known_aliased);
    addrs = filter_aliased(addrs, verdicts, known);
    const std::size_t after_apd = addrs.size();

    if (a.gfw) {
        if (a.dns_responses.empty()) throw Error(Errc::ConfigInvalid, "--gfw needs --dns-responses <csv>");
        PrefixSet injection;
        for (const Prefix& p : default_injection_prefixes()) injection.insert(p);
        if (!a.injection.empty())
            for (const Prefix& p : read_prefix_list(a.injection)) injection.insert(p);
        std::set<Address> injected;
        for (const auto& r : load_dns_responses(a.dns_responses))
            if (gfw_classify(r, injection) == DnsVerdict::Injected) injected.insert(r.responder);
        addrs = filter_addresses(addrs, [&](const Address& x) { return !injected.contains(x); });
    }
    write_address_list(a.out, addrs);
    log.log("info", "filter_done",
            {{"input", std::to_string(before)}, {"after_blocklist", std::to_string(after_block)},
             {"after_apd", std::to_string(after_apd)}, {"output", std::to_string(addrs.size())}});
    return kExitOk;
}

int cmd_generate(const std::string& algo, const std::string& seed_file, std::uint64_t budget, std::uint64_t rng_seed,
                 std::size_t leaf_max, double threshold, const std::string& label, const std::string& out, Logger& log) {
    const AddressList seed = read_address_list(seed_file);
    const std::string seed_label = label.empty() ? fs::path(seed_file).stem().string() : label;
    CandidateSet cs;
    if (algo == "dense")
        cs = dense_generate(seed, {budget, rng_seed, leaf_max}, seed_label);
    else
        cs = entropy_generate(seed, {budget, rng_seed, threshold}, seed_label);
    cs.meta["seed_count"] = std::to_string(seed.size());
    write_candidate_set(out, cs);
    log.log("info", "generate_done", {{"algorithm", algo}, {"seed", std::to_string(seed.size())}, {"candidates", std::to_string(cs.size())}});
    return kExitOk;
}

struct SimulateArgs {
    std::string population, out_dir, targets, scan_out, history_out, start = "2023-01-02", analysis;
    std::size_t snapshots = 0;
    int cadence = 7;
    std::size_t seed_sample = 0;
    std::string seed_out;
    std::uint64_t rng_seed = 0;
};

int cmd_simulate(const SimulateArgs& a, Logger& log) {
    const auto gt = sim::build_population(sim::load_population(a.population));
    if (!a.out_dir.empty()) gt.write_side_files(a.out_dir);
    if (!a.targets.empty()) {
        if (a.scan_out.empty()) throw Error(Errc::ConfigInvalid, "--targets needs --scan-out");
        const AddressList targets = read_address_list(a.targets);
        sim::export_scan(a.scan_out, sim::scan(gt, targets));
    }
    if (!a.history_out.empty()) {
        if (a.snapshots == 0) throw Error(Errc::ConfigInvalid, "--history-out needs --snapshots N");
        const Day start = require_date(a.start, "--start");
        const Day last = start + std::chrono::days{static_cast<long>(a.snapshots - 1) * a.cadence};
        const Day analysis = a.analysis.empty() ? last + std::chrono::days{a.cadence} : require_date(a.analysis, "--analysis-date");
        write_history(a.history_out, sim::simulate_history(gt, start, a.snapshots, a.cadence, analysis, a.rng_seed));
    }
    if (a.seed_sample > 0) {
        if (a.seed_out.empty()) throw Error(Errc::ConfigInvalid, "--seed-sample needs --seed-out");
        std::vector<Address> hosts;
        for (const auto& [addr, _] : gt.responsive()) hosts.push_back(addr);
        Rng rng(a.rng_seed, 0x5eed);
        rng.shuffle(hosts);
        hosts.resize(std::min(hosts.size(), a.seed_sample));
        std::sort(hosts.begin(), hosts.end());
        write_address_list(a.seed_out, hosts);
    }
    log.log("info", "simulate_done", {{"responsive", std::to_string(gt.responsive().size())}, {"networks", std::to_string(gt.networks().size())}});
    return kExitOk;
}

struct EvaluateArgs {
    std::string candidates, raw_candidates, seed, scan, rib, categories, aliased, injection, format = "csv", out;
    std::string algorithm = "external", seed_label = "seed";
    std::optional<double> expected_factor;
};

int cmd_evaluate(const EvaluateArgs& a, Logger& log) {
    const AddressList cands = read_address_list(a.candidates);
    const AddressList raw = a.raw_candidates.empty() ? cands : read_address_list(a.raw_candidates);
    const AddressList seed = read_address_list(a.seed);
    sim::ScanResult result = sim::import_scan(a.scan);
    PrefixSet injection;
    for (const Prefix& p : default_injection_prefixes()) injection.insert(p);
    if (!a.injection.empty())
        for (const Prefix& p : read_prefix_list(a.injection)) injection.insert(p);
    strip_injected_dns(result.per_protocol, result.dns, injection);
    const AddressList keep = dns_only_filter(result.per_protocol);
    const std::set<Address> keep_set(keep.begin(), keep.end());
    std::erase_if(result.per_protocol, [&](const auto& kv) { return !keep_set.contains(kv.first); });

    const PrefixTable rib = load_rib(a.rib);
    const CategoryMap cats = load_categories(a.categories);
    std::vector<Prefix> aliased;
    if (!a.aliased.empty()) aliased = read_prefix_list(a.aliased);
    EvaluationInput in{a.algorithm, a.seed_label, seed, raw, cands, &result, aliased, &rib, &cats};
    MetricsReport report = evaluate(in);
    if (a.expected_factor && flag_if_mismatch(report, "generation_factor", report.generation_factor, *a.expected_factor))
        log.log("warn", "generation_factor_mismatch", {{"expected", format_double(*a.expected_factor)}, {"measured", format_double(report.generation_factor)}});
    const std::vector<MetricsReport> reports{report};
    render_report(reports, a.format == "markdown" ? ReportFormat::Markdown : ReportFormat::Csv, a.out);
    log.log("info", "evaluate_done", {{"candidates", std::to_string(report.candidate_count)}, {"responsive", std::to_string(report.responsive_count)}});
    return kExitOk;
}

PipelineConfig pipeline_config(const Globals& g) {
    if (g.config.empty()) throw Error(Errc::ConfigInvalid, "--config <file> is required");
    PipelineConfig cfg = load_pipeline_config(g.config);
    if (g.jobs > 1) cfg.jobs = g.jobs;
    if (g.rng_seed) cfg.rng_seed = *g.rng_seed;
    return cfg;
}

int report_findings(const std::vector<Finding>& findings, Logger& log) {
    for (const auto& f : findings) log.log("error", "config_invalid", {{"field", f.field}, {"message", f.message}});
    return findings.empty() ? kExitOk : kExitInvalid;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"v6forge: IPv6 hitlist categorization, target generation and evaluation"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config, "Pipeline config file");
    app.add_option("--jobs", g.jobs, "Concurrent pipeline cells")->check(CLI::PositiveNumber);
    std::uint64_t global_seed = 0;
    auto* seed_opt = app.add_option("--rng-seed", global_seed, "Random seed override");

    Logger log;

    // categorize
    std::string rib, cats, input, out_dir;
    auto* c_cat = app.add_subcommand("categorize", "Split an address list by network category");
    c_cat->add_option("--rib", rib)->required();
    c_cat->add_option("--categories", cats)->required();
    c_cat->add_option("--input", input)->required();
    c_cat->add_option("--out-dir", out_dir)->required();

    // stability
    std::string history, analysis, st_out, st_summary;
    long window = 100;
    bool count_trailing = true;
    auto* c_st = app.add_subcommand("stability", "Per-address IP stability over a scan history");
    c_st->add_option("--history", history)->required();
    c_st->add_option("--analysis-date", analysis)->required();
    c_st->add_option("--window", window);
    c_st->add_option("--rib", rib);
    c_st->add_option("--categories", cats);
    c_st->add_option("--count-trailing-removal", count_trailing);
    c_st->add_option("--out", st_out)->required();
    c_st->add_option("--summary", st_summary, "Per-category quartile summary CSV");

    // filter
    FilterArgs fa;
    auto* c_f = app.add_subcommand("filter", "Blocklist, aliased-prefix and GFW filtering");
    c_f->add_option("--blocklist", fa.blocklist);
    c_f->add_flag("--apd", fa.apd);
    c_f->add_option("--probes", fa.probes);
    c_f->add_option("--seed", fa.seed);
    c_f->add_option("--population", fa.population, "Simulator population used as APD prober");
    c_f->add_option("--known-aliased", fa.known_aliased);
    c_f->add_flag("--gfw", fa.gfw);
    c_f->add_option("--injection-prefixes", fa.injection);
    c_f->add_option("--dns-responses", fa.dns_responses);
    c_f->add_option("--input", fa.input)->required();
    c_f->add_option("--out", fa.out)->required();

    // generate
    std::string algo = "dense", seed_file, gen_out, gen_label;
    std::uint64_t budget = 100'000, gen_seed = 0;
    std::size_t leaf_max = 16;
    double threshold = 0.1;
    auto* c_g = app.add_subcommand("generate", "Generate candidates from a seed set");
    c_g->add_option("--algo", algo)->check(CLI::IsMember({"dense", "entropy"}));
    c_g->add_option("--seed-file", seed_file)->required();
    c_g->add_option("--budget", budget);
    c_g->add_option("--rng-seed", gen_seed);
    c_g->add_option("--leaf-max", leaf_max);
    c_g->add_option("--segment-threshold", threshold);
    c_g->add_option("--label", gen_label);
    c_g->add_option("--out", gen_out)->required();

    // simulate
    SimulateArgs sa;
    auto* c_sim = app.add_subcommand("simulate", "Build the synthetic population; scan targets; emit histories");
    c_sim->add_option("--population", sa.population)->required();
    c_sim->add_option("--out-dir", sa.out_dir, "Write rib.csv, categories.csv, hosts.txt, aliased.txt");
    c_sim->add_option("--targets", sa.targets);
    c_sim->add_option("--scan-out", sa.scan_out);
    c_sim->add_option("--history-out", sa.history_out);
    c_sim->add_option("--snapshots", sa.snapshots);
    c_sim->add_option("--start", sa.start);
    c_sim->add_option("--cadence", sa.cadence);
    c_sim->add_option("--analysis-date", sa.analysis);
    c_sim->add_option("--seed-sample", sa.seed_sample, "Sample N responsive hosts as a seed list");
    c_sim->add_option("--seed-out", sa.seed_out);
    c_sim->add_option("--sim-seed", sa.rng_seed);

    // evaluate
    EvaluateArgs ea;
    double expected_factor = 0;
    auto* c_e = app.add_subcommand("evaluate", "Metrics for a candidate set and its scan");
    c_e->add_option("--candidates", ea.candidates)->required();
    c_e->add_option("--raw-candidates", ea.raw_candidates);
    c_e->add_option("--seed", ea.seed)->required();
    c_e->add_option("--scan", ea.scan, "Scan CSV; the .probed list must sit next to it")->required();
    c_e->add_option("--rib", ea.rib)->required();
    c_e->add_option("--categories", ea.categories)->required();
    c_e->add_option("--aliased", ea.aliased);
    c_e->add_option("--injection-prefixes", ea.injection);
    c_e->add_option("--algorithm", ea.algorithm);
    c_e->add_option("--seed-label", ea.seed_label);
    auto* ef = c_e->add_option("--expected-generation-factor", expected_factor);
    c_e->add_option("--format", ea.format)->check(CLI::IsMember({"csv", "markdown"}));
    c_e->add_option("--out", ea.out)->required();

    auto* c_p = app.add_subcommand("pipeline", "Run the full generate/filter/scan/evaluate pipeline");
    auto* c_v = app.add_subcommand("validate", "Check a pipeline config without running it");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitInvalid;
    }
    if (*seed_opt) g.rng_seed = global_seed;

    try {
        if (*c_cat) return cmd_categorize(rib, cats, input, out_dir, log);
        if (*c_st) return cmd_stability(history, analysis, window, rib, cats, count_trailing, st_out, st_summary, log);
        if (*c_f) return cmd_filter(fa, log);
        if (*c_g) return cmd_generate(algo, seed_file, budget, gen_seed, leaf_max, threshold, gen_label, gen_out, log);
        if (*c_sim) return cmd_simulate(sa, log);
        if (*c_e) {
            if (*ef) ea.expected_factor = expected_factor;
            return cmd_evaluate(ea, log);
        }
        if (*c_v) return report_findings(validate_config(pipeline_config(g)), log);
        if (*c_p) {
            const PipelineConfig cfg = pipeline_config(g);
            if (int rc = report_findings(validate_config(cfg), log); rc != kExitOk) return rc;
            const auto outcome = run_pipeline(cfg, log);
            for (const auto& w : outcome.warnings) log.log("warn", "pipeline_warning", {{"message", w}});
            return outcome.failed() > 0 ? kExitCellFailed : kExitOk;
        }
    } catch (const std::exception& e) {
        log.log("error", "command_failed", {{"error", e.what()}});
        return kExitInvalid;
    }
    return kExitOk;
}
