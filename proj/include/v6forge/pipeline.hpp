#pragma once

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include "v6forge/address.hpp"
#include "v6forge/asn_cat.hpp"
#include "v6forge/filters.hpp"
#include "v6forge/metrics.hpp"
#include "v6forge/scan_sim.hpp"
#include "v6forge/textio.hpp"
#include "v6forge/tga.hpp"

namespace v6forge {

namespace fs = std::filesystem;

/// Line-oriented key=value logging. Data never goes here.
class Logger {
public:
    using Sink = std::function<void(const std::string&)>;

    Logger() : sink_([](const std::string& line) { std::fprintf(stderr, "%s\n", line.c_str()); }) {}
    explicit Logger(Sink sink) : sink_(std::move(sink)) {}

    static Logger silent() {
        return Logger([](const std::string&) {});
    }

    void log(const std::string& level, const std::string& event,
             std::initializer_list<std::pair<std::string, std::string>> fields = {}) {
        std::string line = "level=" + level + " event=" + event;
        for (const auto& [k, v] : fields) {
            line += " " + k + "=";
            line += v.find(' ') == std::string::npos ? v : "\"" + v + "\"";
        }
        std::lock_guard lock(mu_);
        sink_(line);
    }

private:
    Sink sink_;
    std::mutex mu_;
};

enum class ScanSourceKind { Simulate, Import };

struct PipelineConfig {
    fs::path seed_file;
    fs::path rib_file;
    fs::path category_file;
    fs::path blocklist_file;
    fs::path known_aliased_file;
    fs::path injection_prefix_file;
    std::vector<std::string> algorithms{"dense", "entropy"};
    std::vector<std::string> categories{"Full"};
    std::uint64_t budget = 100'000;
    std::uint64_t rng_seed = 0;
    ScanSourceKind scan_source = ScanSourceKind::Simulate;
    fs::path scan_path;  // population config or scan CSV
    fs::path out_dir;
    bool apd = true;
    int apd_probes = 16;
    std::size_t leaf_max = 16;
    double segment_threshold = 0.1;
    int jobs = 1;
};

inline const std::set<std::string>& known_algorithms() {
    static const std::set<std::string> k{"dense", "entropy"};
    return k;
}

struct Finding {
    std::string field;
    std::string message;
};

/// All violations, without side effects. Empty means runnable. Optional
/// files (blocklist, aliased, injection, rib/categories when simulating)
/// are only checked when set.
inline std::vector<Finding> validate_config(const PipelineConfig& cfg) {
    std::vector<Finding> out;
    auto need_file = [&](const char* field, const fs::path& p, bool required) {
        if (p.empty()) {
            if (required) out.push_back({field, "missing value"});
            return;
        }
        if (!fs::exists(p)) out.push_back({field, "file not found: " + p.string()});
    };
    const bool simulate = cfg.scan_source == ScanSourceKind::Simulate;
    need_file("seed_file", cfg.seed_file, true);
    need_file("rib_file", cfg.rib_file, !simulate);
    need_file("category_file", cfg.category_file, !simulate);
    need_file("blocklist_file", cfg.blocklist_file, false);
    need_file("known_aliased_file", cfg.known_aliased_file, false);
    need_file("injection_prefix_file", cfg.injection_prefix_file, false);
    need_file("scan_source", cfg.scan_path, true);
    if (cfg.budget == 0) out.push_back({"budget", "budget must be > 0"});
    if (cfg.algorithms.empty()) out.push_back({"algorithms", "no algorithm selected"});
    for (const auto& a : cfg.algorithms)
        if (!known_algorithms().contains(a)) out.push_back({"algorithms", "unknown algorithm '" + a + "'"});
    if (cfg.categories.empty()) out.push_back({"categories", "no seed category selected"});
    for (const auto& c : cfg.categories) {
        const auto cat = parse_category(c);
        const bool ok = c == "Full" || (cat && std::find(kSeedCategories.begin(), kSeedCategories.end(), *cat) !=
                                                   kSeedCategories.end());
        if (!ok) out.push_back({"categories", "unknown seed category '" + c + "'"});
    }
    if (cfg.out_dir.empty()) out.push_back({"out_dir", "missing value"});
    if (cfg.apd_probes <= 0) out.push_back({"apd_probes", "must be > 0"});
    if (cfg.leaf_max == 0) out.push_back({"leaf_max", "must be > 0"});
    if (cfg.jobs <= 0) out.push_back({"jobs", "must be > 0"});
    return out;
}

namespace detail {

inline std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    for (auto item : split(s, ','))
        if (!trim(item).empty()) out.emplace_back(trim(item));
    return out;
}

} // namespace detail

/// Reads a `[pipeline]` section. Relative paths are resolved against the
/// config file's directory. Syntax errors throw; semantic problems are left
/// to `validate_config`.
inline PipelineConfig parse_pipeline_config(std::string_view text, const fs::path& base_dir = {},
                                            const std::string& origin = "<pipeline>") {
    PipelineConfig cfg;
    const auto sections = parse_config_text(text, origin);
    auto path = [&](const std::string& v) -> fs::path {
        if (v.empty()) return {};
        fs::path p(v);
        return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
    };
    for (const auto& s : sections) {
        if (s.name != "pipeline") {
            if (!(s.name.empty() && s.values.empty()))
                throw Error(Errc::ConfigInvalid, origin + ": unknown section '" + s.name + "'");
            continue;
        }
        for (const auto& [k, v] : s.values) {
            auto num = [&]() {
                const auto n = parse_int<std::uint64_t>(v);
                if (!n) throw Error(Errc::ConfigInvalid, origin + ": bad number for " + k);
                return *n;
            };
            if (k == "seed_file") cfg.seed_file = path(v);
            else if (k == "rib_file") cfg.rib_file = path(v);
            else if (k == "category_file") cfg.category_file = path(v);
            else if (k == "blocklist_file") cfg.blocklist_file = path(v);
            else if (k == "known_aliased_file") cfg.known_aliased_file = path(v);
            else if (k == "injection_prefix_file") cfg.injection_prefix_file = path(v);
            else if (k == "algorithms") cfg.algorithms = detail::split_list(v);
            else if (k == "categories") cfg.categories = detail::split_list(v);
            else if (k == "budget") cfg.budget = num();
            else if (k == "rng_seed") cfg.rng_seed = num();
            else if (k == "out_dir") cfg.out_dir = path(v);
            else if (k == "apd") cfg.apd = v == "true" || v == "1";
            else if (k == "apd_probes") cfg.apd_probes = static_cast<int>(num());
            else if (k == "leaf_max") cfg.leaf_max = num();
            else if (k == "jobs") cfg.jobs = static_cast<int>(num());
            else if (k == "segment_threshold") {
                const auto d = parse_double(v);
                if (!d) throw Error(Errc::ConfigInvalid, origin + ": bad segment_threshold");
                cfg.segment_threshold = *d;
            } else if (k == "scan_source") {
                const auto colon = v.find(':');
                const std::string kind = v.substr(0, colon);
                if (colon == std::string::npos || (kind != "simulate" && kind != "import"))
                    throw Error(Errc::ConfigInvalid, origin + ": scan_source must be simulate:<file> or import:<file>");
                cfg.scan_source = kind == "simulate" ? ScanSourceKind::Simulate : ScanSourceKind::Import;
                cfg.scan_path = path(v.substr(colon + 1));
            } else {
                throw Error(Errc::ConfigInvalid, origin + ": unknown key '" + k + "'");
            }
        }
    }
    return cfg;
}

inline PipelineConfig load_pipeline_config(const fs::path& path) {
    return parse_pipeline_config(read_file(path.string()), path.parent_path(), path.string());
}

/// Stage counts of one (algorithm, seed label) cell.
struct CellOutcome {
    std::string algorithm;
    std::string seed_label;
    bool ok = false;
    std::string message;
    std::size_t seed = 0;
    std::size_t generated = 0;
    std::size_t after_blocklist = 0;
    std::size_t after_apd = 0;
    std::size_t responsive = 0;
    std::size_t after_gfw = 0;
    std::size_t after_dns_only = 0;
    std::optional<MetricsReport> report;
    AddressList raw;         // kept for the Combined cell
    AddressList candidates;  // post-filter
};

struct PipelineOutcome {
    std::vector<CellOutcome> cells;
    std::vector<std::string> warnings;
    int failed() const {
        return static_cast<int>(std::count_if(cells.begin(), cells.end(), [](const CellOutcome& c) { return !c.ok; }));
    }
};

namespace detail {

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Everything the cells share; read-only once built.
struct PipelineContext {
    const PipelineConfig* cfg = nullptr;
    PrefixTable rib;
    CategoryMap categories;
    Blocklist blocklist;
    std::vector<Prefix> known_aliased;
    PrefixSet injection;
    std::optional<sim::GroundTruth> truth;
    std::optional<sim::ScanResult> imported;
};

inline sim::ScanResult scan_targets(const PipelineContext& ctx, std::span<const Address> targets) {
    if (ctx.truth) return sim::scan(*ctx.truth, targets);
    sim::ScanResult r;
    r.probed.assign(targets.begin(), targets.end());
    std::sort(r.probed.begin(), r.probed.end());
    r.probed.erase(std::unique(r.probed.begin(), r.probed.end()), r.probed.end());
    for (const Address& a : r.probed) {
        if (!ctx.imported->was_probed(a)) throw Error(Errc::NotFullyProbed, format_address(a) + " missing from imported scan");
        const ProtocolSet s = ctx.imported->protocols_of(a);
        if (s.empty()) continue;
        r.per_protocol.emplace(a, s);
        if (auto it = ctx.imported->dns.find(a); it != ctx.imported->dns.end()) r.dns.emplace(a, it->second);
    }
    return r;
}

/// GFW stripping then DNS-only removal; returns the result restricted to
/// the surviving responders and records the stage counts.
inline sim::ScanResult filter_responses(const PipelineContext& ctx, sim::ScanResult r, CellOutcome& cell) {
    cell.responsive = r.per_protocol.size();
    strip_injected_dns(r.per_protocol, r.dns, ctx.injection);
    std::erase_if(r.per_protocol, [](const auto& kv) { return kv.second.empty(); });
    cell.after_gfw = r.per_protocol.size();
    const AddressList keep = dns_only_filter(r.per_protocol);
    const std::set<Address> keep_set(keep.begin(), keep.end());
    std::erase_if(r.per_protocol, [&](const auto& kv) { return !keep_set.contains(kv.first); });
    std::erase_if(r.dns, [&](const auto& kv) { return !keep_set.contains(kv.first); });
    cell.after_dns_only = r.per_protocol.size();
    return r;
}

inline void write_verdicts(const fs::path& path, std::span<const AliasVerdict> verdicts) {
    std::string out = "prefix,aliased,probes_sent,probes_answered\n";
    for (const auto& v : verdicts)
        out += format_prefix(v.prefix) + "," + (v.aliased ? "true" : "false") + "," + std::to_string(v.probes_sent) +
               "," + std::to_string(v.probes_answered) + "\n";
    write_file(path.string(), out);
}

inline CellOutcome run_cell(const PipelineContext& ctx, const std::string& algorithm, const std::string& label,
                            std::span<const Address> seed, Logger& log) {
    const PipelineConfig& cfg = *ctx.cfg;
    CellOutcome cell;
    cell.algorithm = algorithm;
    cell.seed_label = label;
    cell.seed = seed.size();
    const fs::path dir = cfg.out_dir / "cells" / (algorithm + "_" + label);
    try {
        fs::remove_all(dir);
        fs::create_directories(dir);
        const std::uint64_t cell_seed = derive_seed(cfg.rng_seed, fnv1a(algorithm + "/" + label));
        CandidateSet cs;
        if (algorithm == "dense") {
            cs = dense_generate(seed, {cfg.budget, cell_seed, cfg.leaf_max}, label);
        } else if (algorithm == "entropy") {
            cs = entropy_generate(seed, {cfg.budget, cell_seed, cfg.segment_threshold}, label);
        } else {
            throw Error(Errc::ConfigInvalid, "unknown algorithm " + algorithm);
        }
        cs.meta["cell_rng_seed"] = std::to_string(cell_seed);
        write_candidate_set((dir / "candidates_raw.txt").string(), cs);
        cell.raw = cs.addresses;
        cell.generated = cs.size();

        const AddressList after_block = apply_blocklist(cs.addresses, ctx.blocklist);
        cell.after_blocklist = after_block.size();
        write_address_list((dir / "candidates_blocklisted.txt").string(), after_block);

        std::vector<AliasVerdict> verdicts;
        if (cfg.apd && ctx.truth) {
            const auto cands = alias_candidates(after_block, 64);
            verdicts = detect_aliased([&](const Address& a) { return ctx.truth->probe(a, Protocol::ICMP); }, cands,
                                      cfg.apd_probes, cell_seed);
        }
        write_verdicts(dir / "aliased_verdicts.csv", verdicts);
        cell.candidates = filter_aliased(after_block, verdicts, ctx.known_aliased);
        cell.after_apd = cell.candidates.size();
        write_address_list((dir / "candidates.txt").string(), cell.candidates);

        sim::ScanResult result = scan_targets(ctx, cell.candidates);
        sim::export_scan(dir / "scan.csv", result);
        result = filter_responses(ctx, std::move(result), cell);
        AddressList responsive;
        for (const auto& [a, _] : result.per_protocol) responsive.push_back(a);
        write_address_list((dir / "responsive.txt").string(), responsive);

        std::vector<Prefix> aliased = ctx.known_aliased;
        for (const auto& v : verdicts)
            if (v.aliased) aliased.push_back(v.prefix);
        EvaluationInput in{algorithm, label, seed, cell.raw, cell.candidates, &result, aliased, &ctx.rib, &ctx.categories};
        cell.report = evaluate(in);
        cell.ok = true;
        log.log("info", "cell_done",
                {{"algorithm", algorithm}, {"seed", label}, {"candidates", std::to_string(cell.after_apd)},
                 {"responsive", std::to_string(cell.after_dns_only)}});
    } catch (const std::exception& e) {
        cell.ok = false;
        cell.message = e.what();
        cell.report.reset();
        std::error_code ec;
        fs::remove_all(dir, ec);
        log.log("error", "cell_failed", {{"algorithm", algorithm}, {"seed", label}, {"error", e.what()}});
    }
    return cell;
}

/// Union of every algorithm's candidates for one seed label, evaluated as
/// the pseudo-algorithm "Combined".
inline CellOutcome run_combined(const PipelineContext& ctx, const std::string& label, std::span<const Address> seed,
                                const std::vector<const CellOutcome*>& parts, Logger& log) {
    CellOutcome cell;
    cell.algorithm = "Combined";
    cell.seed_label = label;
    cell.seed = seed.size();
    const fs::path dir = ctx.cfg->out_dir / "cells" / ("Combined_" + label);
    try {
        fs::remove_all(dir);
        fs::create_directories(dir);
        std::set<Address> raw, cands;
        for (const auto* p : parts) {
            raw.insert(p->raw.begin(), p->raw.end());
            cands.insert(p->candidates.begin(), p->candidates.end());
        }
        cell.raw.assign(raw.begin(), raw.end());
        cell.candidates.assign(cands.begin(), cands.end());
        cell.generated = cell.raw.size();
        cell.after_blocklist = apply_blocklist(cell.raw, ctx.blocklist).size();
        cell.after_apd = cell.candidates.size();
        write_address_list((dir / "candidates.txt").string(), cell.candidates);
        sim::ScanResult result = filter_responses(ctx, scan_targets(ctx, cell.candidates), cell);
        std::vector<Prefix> aliased = ctx.known_aliased;
        if (ctx.truth && ctx.cfg->apd) {
            const auto verdicts =
                detect_aliased([&](const Address& a) { return ctx.truth->probe(a, Protocol::ICMP); },
                               alias_candidates(cell.raw, 64), ctx.cfg->apd_probes,
                               derive_seed(ctx.cfg->rng_seed, fnv1a("Combined/" + label)));
            for (const auto& v : verdicts)
                if (v.aliased) aliased.push_back(v.prefix);
        }
        EvaluationInput in{"Combined", label, seed, cell.raw, cell.candidates, &result, aliased, &ctx.rib, &ctx.categories};
        cell.report = evaluate(in);
        cell.ok = true;
    } catch (const std::exception& e) {
        cell.ok = false;
        cell.message = e.what();
        std::error_code ec;
        fs::remove_all(dir, ec);
        log.log("error", "cell_failed", {{"algorithm", "Combined"}, {"seed", label}, {"error", e.what()}});
    }
    return cell;
}

inline std::string render_manifest(std::span<const CellOutcome> cells) {
    std::string out = "algorithm,seed_label,status,seed,generated,after_blocklist,after_apd,responsive,after_gfw,"
                      "after_dns_only,message\n";
    for (const auto& c : cells) {
        std::string msg = c.message;
        std::replace(msg.begin(), msg.end(), ',', ';');
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        out += c.algorithm + "," + c.seed_label + "," + (c.ok ? "ok" : "failed") + "," + std::to_string(c.seed) + "," +
               std::to_string(c.generated) + "," + std::to_string(c.after_blocklist) + "," +
               std::to_string(c.after_apd) + "," + std::to_string(c.responsive) + "," + std::to_string(c.after_gfw) +
               "," + std::to_string(c.after_dns_only) + "," + msg + "\n";
    }
    return out;
}

} // namespace detail

/// Runs every (algorithm x seed label) cell: generate, finalize,
/// blocklist, alias detection + known-aliased filter, scan, GFW and
/// DNS-only filtering, metrics. Writes per-cell artifacts, `manifest.csv`,
/// `report.csv` and `report.md` under `out_dir`. A failing cell is recorded
/// and the rest proceed. Assumes `validate_config(cfg)` is empty.
inline PipelineOutcome run_pipeline(const PipelineConfig& cfg, Logger& log) {
    PipelineOutcome outcome;
    fs::create_directories(cfg.out_dir);

    AddressList seed_all;
    {
        std::unordered_set<Address> seen;
        for (const Address& a : read_address_list(cfg.seed_file.string()))
            if (seen.insert(a).second) seed_all.push_back(a);
    }

    detail::PipelineContext ctx;
    ctx.cfg = &cfg;
    if (cfg.scan_source == ScanSourceKind::Simulate) {
        ctx.truth = sim::build_population(sim::load_population(cfg.scan_path.string()));
    } else {
        ctx.imported = sim::import_scan(cfg.scan_path);
    }
    ctx.rib = cfg.rib_file.empty() ? ctx.truth->rib() : load_rib(cfg.rib_file.string());
    ctx.categories = cfg.category_file.empty() ? ctx.truth->categories() : load_categories(cfg.category_file.string());
    if (!cfg.blocklist_file.empty()) ctx.blocklist = Blocklist(read_prefix_list(cfg.blocklist_file.string()));
    if (!cfg.known_aliased_file.empty()) ctx.known_aliased = read_prefix_list(cfg.known_aliased_file.string());
    for (const Prefix& p : default_injection_prefixes()) ctx.injection.insert(p);
    if (!cfg.injection_prefix_file.empty())
        for (const Prefix& p : read_prefix_list(cfg.injection_prefix_file.string())) ctx.injection.insert(p);
    if (cfg.apd && !ctx.truth) {
        outcome.warnings.push_back("alias detection needs a live prober; imported scans use known aliased prefixes only");
        log.log("warn", "apd_skipped", {{"reason", "imported scan"}});
    }

    std::vector<std::pair<std::string, AddressList>> seeds;
    if (seed_all.empty()) {
        outcome.warnings.push_back("seed file is empty; no cells to run");
        log.log("warn", "empty_seed", {{"file", cfg.seed_file.string()}});
    } else {
        const auto split_seed = split_by_category(seed_all, ctx.rib, ctx.categories);
        fs::create_directories(cfg.out_dir / "seeds");
        for (const auto& label : cfg.categories) {
            AddressList s;
            if (label == "Full") {
                s = seed_all;
            } else if (auto it = split_seed.find(*parse_category(label)); it != split_seed.end()) {
                s = it->second;
            }
            write_address_list((cfg.out_dir / "seeds" / (label + ".txt")).string(), s);
            seeds.emplace_back(label, std::move(s));
        }
    }

    struct Job {
        std::string algorithm;
        std::size_t seed_index;
    };
    std::vector<Job> jobs;
    for (std::size_t s = 0; s < seeds.size(); ++s)
        for (const auto& a : cfg.algorithms) jobs.push_back({a, s});

    std::vector<CellOutcome> results(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            const auto& [label, seed] = seeds[jobs[i].seed_index];
            results[i] = detail::run_cell(ctx, jobs[i].algorithm, label, seed, log);
        }
    };
    const int threads = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(jobs.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    for (auto& r : results) outcome.cells.push_back(std::move(r));
    if (cfg.algorithms.size() > 1) {
        for (const auto& [label, seed] : seeds) {
            std::vector<const CellOutcome*> parts;
            for (const auto& c : outcome.cells)
                if (c.seed_label == label && c.ok) parts.push_back(&c);
            if (parts.empty()) continue;
            outcome.cells.push_back(detail::run_combined(ctx, label, seed, parts, log));
        }
    }

    std::vector<MetricsReport> reports;
    for (const auto& c : outcome.cells)
        if (c.report) reports.push_back(*c.report);
    write_file((cfg.out_dir / "manifest.csv").string(), detail::render_manifest(outcome.cells));
    write_file((cfg.out_dir / "report.csv").string(), render_csv(reports));
    write_file((cfg.out_dir / "report.md").string(), render_markdown(reports));
    log.log("info", "pipeline_done",
            {{"cells", std::to_string(outcome.cells.size())}, {"failed", std::to_string(outcome.failed())}});
    return outcome;
}

} // namespace v6forge
