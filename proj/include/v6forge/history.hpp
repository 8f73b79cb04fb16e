#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "v6forge/address.hpp"
#include "v6forge/asn_cat.hpp"
#include "v6forge/textio.hpp"

namespace v6forge {

struct ScanSnapshot {
    Day date;
    std::unordered_set<Address> responsive;
    /// Optional per-protocol detail; empty means unknown. Keys are always
    /// members of `responsive`.
    std::unordered_map<Address, ProtocolSet> per_protocol;
};

/// Date-ordered snapshots plus the day the analysis is performed on.
class ScanHistory {
public:
    ScanHistory(std::vector<ScanSnapshot> snapshots, std::optional<Day> analysis_date = std::nullopt)
        : snapshots_(std::move(snapshots)) {
        if (snapshots_.empty()) throw Error(Errc::NoSnapshots, "history needs at least one snapshot");
        std::sort(snapshots_.begin(), snapshots_.end(),
                  [](const ScanSnapshot& a, const ScanSnapshot& b) { return a.date < b.date; });
        for (std::size_t i = 1; i < snapshots_.size(); ++i)
            if (snapshots_[i].date == snapshots_[i - 1].date)
                throw Error(Errc::MalformedRow, "duplicate snapshot date " + format_date(snapshots_[i].date));
        analysis_date_ = analysis_date.value_or(snapshots_.back().date);
        if (analysis_date_ < snapshots_.back().date)
            throw Error(Errc::ConfigInvalid, "analysis date precedes last snapshot");
    }

    const std::vector<ScanSnapshot>& snapshots() const { return snapshots_; }
    Day analysis_date() const { return analysis_date_; }

    /// Days snapshot `i` stays in force: until the next snapshot, the last
    /// one until the analysis date.
    long span_days(std::size_t i) const {
        const Day end = i + 1 < snapshots_.size() ? snapshots_[i + 1].date : analysis_date_;
        return days_between(snapshots_[i].date, end);
    }

private:
    std::vector<ScanSnapshot> snapshots_;
    Day analysis_date_;
};

struct StabilityRecord {
    Day first_seen;
    long state_changes = 0;
    long uptime_days = 0;
    long downtime_days = 0;

    bool operator==(const StabilityRecord&) const = default;
};

struct StabilityOptions {
    /// When false, a final removal that is never followed by a re-addition
    /// is not counted as a state change.
    bool count_trailing_removal = true;
};

struct HistoryLoadStats {
    std::size_t rows = 0;
    std::size_t malformed = 0;
    std::vector<std::string> problems;
};

/// Loads `YYYY-MM-DD.csv` snapshot files with rows `address[,protocol]`.
/// Malformed rows are skipped and reported unless they exceed 1% of all
/// rows, in which case the load fails.
inline ScanHistory load_history(const std::filesystem::path& dir, std::optional<Day> analysis_date = std::nullopt,
                                HistoryLoadStats* stats_out = nullptr) {
    if (!std::filesystem::is_directory(dir)) throw Error(Errc::IoError, dir.string() + " is not a directory");
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        const std::string name = e.path().filename().string();
        if (e.is_regular_file() && name.size() == 14 && e.path().extension() == ".csv" &&
            parse_date(std::string_view(name).substr(0, 10)))
            files.push_back(e.path());
    }
    if (files.empty()) throw Error(Errc::NoSnapshots, "no YYYY-MM-DD.csv files in " + dir.string());
    std::sort(files.begin(), files.end());

    HistoryLoadStats stats;
    std::vector<ScanSnapshot> snaps;
    for (const auto& f : files) {
        ScanSnapshot snap;
        snap.date = *parse_date(f.filename().string().substr(0, 10));
        const auto lines = read_lines(f.string());
        for (std::size_t i = 0; i < lines.size(); ++i) {
            std::string_view line = trim(lines[i]);
            if (line.empty()) continue;
            if (i == 0 && line.starts_with("address")) continue;
            ++stats.rows;
            const auto cols = split(line, ',');
            const auto addr = cols.size() <= 2 ? try_parse_address(trim(cols[0])) : std::nullopt;
            std::optional<Protocol> proto;
            if (cols.size() == 2) proto = parse_protocol(trim(cols[1]));
            if (!addr || (cols.size() == 2 && !proto)) {
                ++stats.malformed;
                if (stats.problems.size() < 10)
                    stats.problems.push_back(f.string() + ":" + std::to_string(i + 1) + ": malformed row");
                continue;
            }
            snap.responsive.insert(*addr);
            if (proto) snap.per_protocol[*addr].insert(*proto);
        }
        snaps.push_back(std::move(snap));
    }
    if (stats.malformed * 100 > stats.rows)
        throw Error(Errc::MalformedRow, std::to_string(stats.malformed) + " of " + std::to_string(stats.rows) +
                                            " rows malformed; first: " + stats.problems.front());
    if (stats_out) *stats_out = stats;
    return ScanHistory(std::move(snaps), analysis_date);
}

/// Writes one snapshot file per entry in the `load_history` layout.
inline void write_history(const std::filesystem::path& dir, const ScanHistory& h) {
    std::filesystem::create_directories(dir);
    for (const auto& s : h.snapshots()) {
        std::vector<Address> addrs(s.responsive.begin(), s.responsive.end());
        std::sort(addrs.begin(), addrs.end());
        std::string out;
        for (const Address& a : addrs) {
            auto it = s.per_protocol.find(a);
            if (it == s.per_protocol.end() || it->second.empty()) {
                out += format_address(a) + "\n";
                continue;
            }
            for (Protocol p : kAllProtocols)
                if (it->second.contains(p)) out += format_address(a) + "," + std::string(to_string(p)) + "\n";
        }
        write_file((dir / (format_date(s.date) + ".csv")).string(), out);
    }
}

namespace detail {

/// Stability from the sorted indices of the snapshots where the address was
/// responsive. Each interior gap is a removal plus a re-addition; ending
/// before the last snapshot is one more removal.
inline StabilityRecord stability_from_indices(const ScanHistory& h, const std::vector<std::uint32_t>& up,
                                              const StabilityOptions& opts) {
    const auto& snaps = h.snapshots();
    StabilityRecord r;
    r.first_seen = snaps[up.front()].date;
    r.state_changes = 1;
    for (std::size_t k = 0; k < up.size(); ++k) {
        r.uptime_days += h.span_days(up[k]);
        if (k + 1 < up.size() && up[k + 1] != up[k] + 1) r.state_changes += 2;
    }
    if (up.back() + 1 < snaps.size() && opts.count_trailing_removal) r.state_changes += 1;
    r.downtime_days = days_between(r.first_seen, h.analysis_date()) - r.uptime_days;
    return r;
}

} // namespace detail

inline std::optional<StabilityRecord> stability(const ScanHistory& h, const Address& a,
                                                const StabilityOptions& opts = {}) {
    std::vector<std::uint32_t> up;
    const auto& snaps = h.snapshots();
    for (std::uint32_t i = 0; i < snaps.size(); ++i)
        if (snaps[i].responsive.contains(a)) up.push_back(i);
    if (up.empty()) return std::nullopt;
    return detail::stability_from_indices(h, up, opts);
}

/// Stability of every address ever responsive, sorted by address.
inline std::vector<std::pair<Address, StabilityRecord>> stability_all(const ScanHistory& h,
                                                                      const StabilityOptions& opts = {}) {
    std::unordered_map<Address, std::vector<std::uint32_t>> index;
    const auto& snaps = h.snapshots();
    for (std::uint32_t i = 0; i < snaps.size(); ++i)
        for (const Address& a : snaps[i].responsive) index[a].push_back(i);
    std::vector<std::pair<Address, StabilityRecord>> out;
    out.reserve(index.size());
    for (const auto& [a, up] : index) out.emplace_back(a, detail::stability_from_indices(h, up, opts));
    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    return out;
}

/// An address is old enough for stability analysis once it was first seen
/// at least `window_days` before the analysis date (boundary included).
inline bool eligible(const StabilityRecord& r, Day analysis_date, long window_days = 100) {
    return days_between(r.first_seen, analysis_date) >= window_days;
}

inline bool eligible(const ScanHistory& h, const Address& a, long window_days = 100) {
    const auto r = stability(h, a);
    return r && eligible(*r, h.analysis_date(), window_days);
}

/// Five-number summary; quartiles use linear interpolation between order
/// statistics (position p*(n-1)).
struct Summary {
    double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};

inline double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) return 0.0;
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline Summary summarize(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    if (values.empty()) return {};
    return {values.front(), quantile_sorted(values, 0.25), quantile_sorted(values, 0.5), quantile_sorted(values, 0.75),
            values.back()};
}

struct CategoryStability {
    std::size_t count = 0;
    Summary state_changes;
    Summary uptime_days;
    Summary downtime_days;
};

/// Per-category distribution summaries over eligible addresses. Categories
/// with no eligible address are omitted.
inline std::map<NetworkCategory, CategoryStability> stability_by_category(const ScanHistory& h, const PrefixTable& t,
                                                                          const CategoryMap& c,
                                                                          long window_days = 100,
                                                                          const StabilityOptions& opts = {}) {
    struct Columns {
        std::vector<double> changes, up, down;
    };
    std::map<NetworkCategory, Columns> cols;
    for (const auto& [a, r] : stability_all(h, opts)) {
        if (!eligible(r, h.analysis_date(), window_days)) continue;
        auto& col = cols[categorize(a, t, c)];
        col.changes.push_back(static_cast<double>(r.state_changes));
        col.up.push_back(static_cast<double>(r.uptime_days));
        col.down.push_back(static_cast<double>(r.downtime_days));
    }
    std::map<NetworkCategory, CategoryStability> out;
    for (auto& [cat, col] : cols)
        out[cat] = {col.changes.size(), summarize(std::move(col.changes)), summarize(std::move(col.up)),
                    summarize(std::move(col.down))};
    return out;
}

} // namespace v6forge
