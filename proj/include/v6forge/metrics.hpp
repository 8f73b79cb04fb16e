#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "v6forge/address.hpp"
#include "v6forge/asn_cat.hpp"
#include "v6forge/prefix_trie.hpp"
#include "v6forge/scan_sim.hpp"
#include "v6forge/textio.hpp"

namespace v6forge {

struct AsStats {
    std::size_t candidate_ases = 0;
    std::size_t responsive_ases = 0;
    std::size_t seed_ases = 0;
    double seed_as_coverage = 0.0;
    std::size_t newly_covered_ases = 0;
    /// Responsive-address shares per AS, largest first, cumulatively summed.
    std::vector<double> cumulative_shares;
};

struct MetricsReport {
    std::string algorithm;
    std::string seed_label;
    std::size_t seed_count = 0;
    std::size_t candidate_count = 0;
    std::size_t responsive_count = 0;
    double generation_factor = 0.0;
    double response_rate = 0.0;
    double aliased_ratio = 0.0;
    std::map<NetworkCategory, double> category_distribution;
    std::map<Protocol, double> protocol_rates;
    AsStats as_stats;
    /// External expectations that disagree with the measured values, as
    /// (metric, expected value).
    std::vector<std::pair<std::string, double>> mismatches;

    std::string label() const { return algorithm + "/" + seed_label; }
};

inline double generation_factor(std::size_t candidate_count, std::size_t seed_count) {
    if (seed_count == 0) throw Error(Errc::EmptySeed, "generation factor needs a non-empty seed");
    return static_cast<double>(candidate_count) / static_cast<double>(seed_count);
}

/// Share of candidates answering at least one protocol. Every candidate
/// must have been probed.
inline double response_rate(std::span<const Address> candidates, const sim::ScanResult& result) {
    if (candidates.empty()) return 0.0;
    std::size_t hits = 0;
    for (const Address& a : candidates) {
        if (!result.was_probed(a)) throw Error(Errc::NotFullyProbed, format_address(a) + " was not probed");
        if (!result.protocols_of(a).empty()) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(candidates.size());
}

inline double response_rate_from_counts(double responsive, double candidates) {
    return candidates > 0 ? responsive / candidates : 0.0;
}

inline std::map<NetworkCategory, double> category_distribution(std::span<const Address> responsive,
                                                               const PrefixTable& t, const CategoryMap& c) {
    std::map<NetworkCategory, double> out;
    if (responsive.empty()) return out;
    std::map<NetworkCategory, std::size_t> counts;
    for (const Address& a : responsive) ++counts[categorize(a, t, c)];
    for (const auto& [cat, n] : counts) out[cat] = static_cast<double>(n) / static_cast<double>(responsive.size());
    return out;
}

inline AsStats as_stats(std::span<const Address> candidates, std::span<const Address> responsive,
                        std::span<const Address> seed, const PrefixTable& t) {
    auto ases_of = [&](std::span<const Address> addrs) {
        std::set<Asn> s;
        for (const Address& a : addrs)
            if (auto asn = t.lookup_origin(a)) s.insert(*asn);
        return s;
    };
    AsStats st;
    const auto cand = ases_of(candidates);
    const auto seed_ases = ases_of(seed);
    std::map<Asn, std::size_t> resp_counts;
    std::size_t resp_total = 0;
    for (const Address& a : responsive)
        if (auto asn = t.lookup_origin(a)) {
            ++resp_counts[*asn];
            ++resp_total;
        }
    st.candidate_ases = cand.size();
    st.responsive_ases = resp_counts.size();
    st.seed_ases = seed_ases.size();
    std::size_t covered = 0;
    for (const auto& [asn, _] : resp_counts) {
        if (seed_ases.contains(asn))
            ++covered;
        else
            ++st.newly_covered_ases;
    }
    st.seed_as_coverage = seed_ases.empty() ? 0.0 : static_cast<double>(covered) / static_cast<double>(seed_ases.size());

    std::vector<std::size_t> sizes;
    for (const auto& [_, n] : resp_counts) sizes.push_back(n);
    std::sort(sizes.begin(), sizes.end(), std::greater<>());
    std::size_t acc = 0;
    for (std::size_t n : sizes) {
        acc += n;
        st.cumulative_shares.push_back(static_cast<double>(acc) / static_cast<double>(resp_total));
    }
    return st;
}

/// Share of raw (pre-filter) candidates inside aliased prefixes.
inline double aliased_ratio(std::span<const Address> raw_candidates, std::span<const Prefix> aliased) {
    if (raw_candidates.empty() || aliased.empty()) return 0.0;
    const PrefixSet set(aliased);
    std::size_t hits = 0;
    for (const Address& a : raw_candidates)
        if (set.covers(a)) ++hits;
    return static_cast<double>(hits) / static_cast<double>(raw_candidates.size());
}

/// Per protocol: responders on that protocol over responders on any
/// protocol.
inline std::map<Protocol, double> protocol_rates(std::span<const Address> responsive, const sim::ScanResult& result) {
    std::map<Protocol, double> out;
    std::array<std::size_t, 5> counts{};
    std::size_t any = 0;
    for (const Address& a : responsive) {
        const ProtocolSet s = result.protocols_of(a);
        if (s.empty()) continue;
        ++any;
        for (Protocol p : kAllProtocols)
            if (s.contains(p)) ++counts[static_cast<int>(p)];
    }
    for (Protocol p : kAllProtocols)
        out[p] = any ? static_cast<double>(counts[static_cast<int>(p)]) / static_cast<double>(any) : 0.0;
    return out;
}

struct EvaluationInput {
    std::string algorithm;
    std::string seed_label;
    std::span<const Address> seed;
    std::span<const Address> raw_candidates;  // before blocklist / alias filtering
    std::span<const Address> candidates;      // after filtering, all probed
    const sim::ScanResult* result = nullptr;  // already GFW / DNS-only filtered
    std::span<const Prefix> aliased;
    const PrefixTable* rib = nullptr;
    const CategoryMap* categories = nullptr;
};

inline MetricsReport evaluate(const EvaluationInput& in) {
    MetricsReport r;
    r.algorithm = in.algorithm;
    r.seed_label = in.seed_label;
    r.seed_count = in.seed.size();
    r.candidate_count = in.candidates.size();
    r.generation_factor = generation_factor(in.candidates.size(), in.seed.size());
    r.response_rate = response_rate(in.candidates, *in.result);
    r.aliased_ratio = aliased_ratio(in.raw_candidates, in.aliased);
    AddressList responsive;
    for (const Address& a : in.candidates)
        if (!in.result->protocols_of(a).empty()) responsive.push_back(a);
    r.responsive_count = responsive.size();
    r.category_distribution = category_distribution(responsive, *in.rib, *in.categories);
    r.protocol_rates = protocol_rates(responsive, *in.result);
    r.as_stats = as_stats(in.candidates, responsive, in.seed, *in.rib);
    return r;
}

/// Records a mismatch when `expected` differs from `actual` by more than
/// `tolerance` (relative).
inline bool flag_if_mismatch(MetricsReport& r, const std::string& metric, double actual, double expected,
                             double tolerance = 0.05) {
    const double denom = std::max(std::fabs(expected), 1e-12);
    if (std::fabs(actual - expected) / denom <= tolerance) return false;
    r.mismatches.emplace_back(metric, expected);
    return true;
}

// --- rendering ---------------------------------------------------------

/// One row of the long-form report CSV: metric,label,category,value.
struct ReportRow {
    std::string metric;
    std::string label;
    std::string category;
    double value = 0.0;

    bool operator==(const ReportRow&) const = default;
};

enum class ValueKind { Count, Factor, Share };

struct MetricDef {
    const char* name;
    const char* title;
    ValueKind kind;
};

/// Row groups in report order.
inline constexpr std::array<MetricDef, 12> kMetricOrder{{
    {"candidate_count", "Number of candidate addresses", ValueKind::Count},
    {"generation_factor", "Generation factor", ValueKind::Factor},
    {"responsive_count", "Number of responsive addresses", ValueKind::Count},
    {"response_rate", "Relative response rate", ValueKind::Share},
    {"aliased_ratio", "Aliased prefix ratio", ValueKind::Share},
    {"candidate_ases", "Candidate ASes", ValueKind::Count},
    {"responsive_ases", "Responsive ASes", ValueKind::Count},
    {"seed_as_coverage", "Coverage of seed ASes", ValueKind::Share},
    {"newly_covered_ases", "Number of newly covered ASes", ValueKind::Count},
    {"category_share", "Category distribution", ValueKind::Share},
    {"protocol_rate", "Protocol response rate", ValueKind::Share},
    {"cumulative_as_share", "Cumulative AS share", ValueKind::Share},
}};

inline std::vector<ReportRow> report_rows(const MetricsReport& r) {
    std::vector<ReportRow> rows;
    const std::string label = r.label();
    auto add = [&](const char* m, std::string cat, double v) { rows.push_back({m, label, std::move(cat), v}); };
    add("candidate_count", "", static_cast<double>(r.candidate_count));
    add("generation_factor", "", r.generation_factor);
    add("responsive_count", "", static_cast<double>(r.responsive_count));
    add("response_rate", "", r.response_rate);
    add("aliased_ratio", "", r.aliased_ratio);
    add("candidate_ases", "", static_cast<double>(r.as_stats.candidate_ases));
    add("responsive_ases", "", static_cast<double>(r.as_stats.responsive_ases));
    add("seed_as_coverage", "", r.as_stats.seed_as_coverage);
    add("newly_covered_ases", "", static_cast<double>(r.as_stats.newly_covered_ases));
    for (const auto& [c, v] : r.category_distribution) add("category_share", std::string(to_string(c)), v);
    for (const auto& [p, v] : r.protocol_rates) add("protocol_rate", std::string(to_string(p)), v);
    for (std::size_t i = 0; i < r.as_stats.cumulative_shares.size(); ++i) {
        char idx[16];
        std::snprintf(idx, sizeof idx, "%06zu", i + 1);
        add("cumulative_as_share", idx, r.as_stats.cumulative_shares[i]);
    }
    for (const auto& [m, expected] : r.mismatches) rows.push_back({m + "_expected", label, "mismatch", expected});
    return rows;
}

namespace detail {

inline int metric_rank(const std::string& m) {
    for (std::size_t i = 0; i < kMetricOrder.size(); ++i)
        if (m == kMetricOrder[i].name) return static_cast<int>(i);
    return static_cast<int>(kMetricOrder.size());
}

inline std::vector<ReportRow> sorted_rows(std::span<const MetricsReport> reports) {
    std::vector<ReportRow> rows;
    for (const auto& r : reports) {
        auto part = report_rows(r);
        rows.insert(rows.end(), part.begin(), part.end());
    }
    std::stable_sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
        const int ra = metric_rank(a.metric), rb = metric_rank(b.metric);
        if (ra != rb) return ra < rb;
        if (a.metric != b.metric) return a.metric < b.metric;
        if (a.label != b.label) return a.label < b.label;
        return a.category < b.category;
    });
    return rows;
}

} // namespace detail

/// Counts with k/M suffixes (>= 1e6 -> M, >= 1e3 -> k), 2 decimals.
inline std::string format_count(double v) {
    char buf[64];
    if (v >= 1e6)
        std::snprintf(buf, sizeof buf, "%.2fM", v / 1e6);
    else if (v >= 1e3)
        std::snprintf(buf, sizeof buf, "%.2fk", v / 1e3);
    else
        std::snprintf(buf, sizeof buf, "%.0f", v);
    return buf;
}

inline std::string format_share(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f%%", v * 100.0);
    return buf;
}

inline std::string format_factor(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string format_value(ValueKind k, double v) {
    switch (k) {
    case ValueKind::Count: return format_count(v);
    case ValueKind::Factor: return format_factor(v);
    case ValueKind::Share: return format_share(v);
    }
    return format_double(v);
}

/// Long-form CSV with exact (round-trippable) values.
inline std::string render_csv(std::span<const MetricsReport> reports) {
    std::string out = "metric,label,category,value\n";
    for (const auto& row : detail::sorted_rows(reports))
        out += row.metric + "," + row.label + "," + row.category + "," + format_double(row.value) + "\n";
    return out;
}

/// Table with one column per algorithm and one row per (metric, seed
/// label), values in display format.
inline std::string render_markdown(std::span<const MetricsReport> reports) {
    std::set<std::string> algorithms, seeds;
    std::map<std::pair<std::string, std::string>, const MetricsReport*> by_cell;
    for (const auto& r : reports) {
        algorithms.insert(r.algorithm);
        seeds.insert(r.seed_label);
        by_cell[{r.algorithm, r.seed_label}] = &r;
    }
    std::string out = "| Metric | Seed |";
    for (const auto& a : algorithms) out += " " + a + " |";
    out += "\n|---|---|";
    for (std::size_t i = 0; i < algorithms.size(); ++i) out += "---:|";
    out += "\n";
    if (reports.empty()) return out;

    auto scalar = [](const MetricsReport& r, const std::string& m) -> std::optional<double> {
        for (const auto& row : report_rows(r))
            if (row.metric == m && row.category.empty()) return row.value;
        return std::nullopt;
    };
    for (const auto& def : kMetricOrder) {
        if (def.name == std::string("category_share") || def.name == std::string("protocol_rate") ||
            def.name == std::string("cumulative_as_share"))
            continue;
        for (const auto& s : seeds) {
            out += std::string("| ") + def.title + " | " + s + " |";
            for (const auto& a : algorithms) {
                auto it = by_cell.find({a, s});
                const auto v = it == by_cell.end() ? std::nullopt : scalar(*it->second, def.name);
                out += " " + (v ? format_value(def.kind, *v) : std::string("-")) + " |";
            }
            out += "\n";
        }
    }
    bool notes = false;
    for (const auto& r : reports)
        for (const auto& [m, expected] : r.mismatches) {
            if (!notes) out += "\nNotes:\n";
            notes = true;
            out += "- " + r.label() + ": measured " + m + " differs from expected " + format_double(expected) +
                   " by more than 5%\n";
        }
    return out;
}

enum class ReportFormat { Csv, Markdown };

inline void render_report(std::span<const MetricsReport> reports, ReportFormat format, const std::string& path) {
    write_file(path, format == ReportFormat::Csv ? render_csv(reports) : render_markdown(reports));
}

inline std::vector<ReportRow> parse_report_csv(std::string_view text) {
    std::vector<ReportRow> rows;
    const auto lines = split(text, '\n');
    if (lines.empty() || trim(lines[0]) != "metric,label,category,value")
        throw Error(Errc::MalformedRow, "report CSV: bad header");
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        const auto cols = split(lines[i], ',');
        const auto v = cols.size() == 4 ? parse_double(cols[3]) : std::nullopt;
        if (!v) throw Error(Errc::MalformedRow, "report CSV line " + std::to_string(i + 1));
        rows.push_back({std::string(cols[0]), std::string(cols[1]), std::string(cols[2]), *v});
    }
    return rows;
}

} // namespace v6forge
