#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "v6forge/address.hpp"
#include "v6forge/prefix_trie.hpp"
#include "v6forge/textio.hpp"

namespace v6forge {

using Asn = std::uint32_t;

enum class NetworkCategory : std::uint8_t { Content, ISP, NSP, Educational, NonProfit, Others, Unknown };

inline constexpr std::array<NetworkCategory, 7> kAllCategories{
    NetworkCategory::Content,   NetworkCategory::ISP,    NetworkCategory::NSP,    NetworkCategory::Educational,
    NetworkCategory::NonProfit, NetworkCategory::Others, NetworkCategory::Unknown};

/// The five categories a seed set can be filtered to.
inline constexpr std::array<NetworkCategory, 5> kSeedCategories{NetworkCategory::Content, NetworkCategory::ISP,
                                                                NetworkCategory::NSP, NetworkCategory::Educational,
                                                                NetworkCategory::NonProfit};

inline std::string_view to_string(NetworkCategory c) {
    switch (c) {
    case NetworkCategory::Content: return "Content";
    case NetworkCategory::ISP: return "ISP";
    case NetworkCategory::NSP: return "NSP";
    case NetworkCategory::Educational: return "Educational";
    case NetworkCategory::NonProfit: return "NonProfit";
    case NetworkCategory::Others: return "Others";
    case NetworkCategory::Unknown: return "Unknown";
    }
    return "?";
}

/// Accepts the category names printed by `to_string` (and "Non-Profit").
inline std::optional<NetworkCategory> parse_category(std::string_view s) {
    for (NetworkCategory c : kAllCategories)
        if (s == to_string(c)) return c;
    if (s == "Non-Profit") return NetworkCategory::NonProfit;
    return std::nullopt;
}

/// Verbatim PeeringDB "info_type" label to category. Only five labels are
/// modeled; every other label (Enterprise, Government, Route Server, ...)
/// is Others.
inline NetworkCategory category_from_peeringdb(std::string_view label) {
    label = trim(label);
    if (label == "Content") return NetworkCategory::Content;
    if (label == "Cable/DSL/ISP") return NetworkCategory::ISP;
    if (label == "NSP") return NetworkCategory::NSP;
    if (label == "Educational/Research") return NetworkCategory::Educational;
    if (label == "Non-Profit") return NetworkCategory::NonProfit;
    return NetworkCategory::Others;
}

/// Inverse of `category_from_peeringdb` for the modeled categories.
inline std::string_view peeringdb_label(NetworkCategory c) {
    switch (c) {
    case NetworkCategory::Content: return "Content";
    case NetworkCategory::ISP: return "Cable/DSL/ISP";
    case NetworkCategory::NSP: return "NSP";
    case NetworkCategory::Educational: return "Educational/Research";
    case NetworkCategory::NonProfit: return "Non-Profit";
    default: return "Enterprise";
    }
}

struct LoadStats {
    std::size_t rows = 0;
    std::size_t malformed = 0;
    std::size_t duplicates = 0;
    std::vector<std::string> problems;  // first few malformed rows, "file:line: why"
};

/// Origin-AS lookup table. Each prefix keeps a single origin: when a prefix
/// is announced by several ASes, the lowest ASN wins.
class PrefixTable {
public:
    void add(const Prefix& p, Asn asn) {
        bool dup = false;
        trie_.insert(p, asn, [&](Asn old, Asn incoming) {
            dup = true;
            return std::min(old, incoming);
        });
        if (dup) ++stats_.duplicates;
    }

    std::optional<Asn> lookup_origin(const Address& a) const {
        auto hit = trie_.longest_match(a);
        if (!hit) return std::nullopt;
        return hit->first;
    }

    std::size_t size() const { return trie_.size(); }
    std::vector<std::pair<Prefix, Asn>> entries() const { return trie_.entries(); }
    const LoadStats& stats() const { return stats_; }
    LoadStats& stats() { return stats_; }

private:
    PrefixTrie<Asn> trie_;
    LoadStats stats_;
};

inline std::optional<Asn> lookup_origin(const PrefixTable& t, const Address& a) { return t.lookup_origin(a); }

/// Reads a `prefix,asn` CSV (header required). Bad rows are counted in the
/// table's stats; the load fails only if no row is usable.
inline PrefixTable load_rib(const std::string& path) {
    const auto lines = read_lines(path);
    PrefixTable table;
    auto& st = table.stats();
    auto bad = [&](std::size_t lineno, const std::string& why) {
        ++st.malformed;
        if (st.problems.size() < 10) st.problems.push_back(path + ":" + std::to_string(lineno) + ": " + why);
    };
    if (lines.empty() || trim(lines[0]) != "prefix,asn")
        throw Error(Errc::MalformedRow, path + ": expected header 'prefix,asn'");
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        ++st.rows;
        const auto cols = split(lines[i], ',');
        if (cols.size() != 2) {
            bad(i + 1, "expected 2 columns");
            continue;
        }
        const auto asn = parse_int<Asn>(cols[1]);
        if (!asn || *asn == 0) {
            bad(i + 1, "bad asn");
            continue;
        }
        try {
            table.add(parse_prefix(trim(cols[0])), *asn);
        } catch (const Error& e) {
            bad(i + 1, e.what());
        }
    }
    if (table.size() == 0) throw Error(Errc::EmptyTable, path + ": no valid rows");
    return table;
}

class CategoryMap {
public:
    void set(Asn asn, NetworkCategory c) { map_[asn] = c; }

    std::optional<NetworkCategory> find(Asn asn) const {
        auto it = map_.find(asn);
        if (it == map_.end()) return std::nullopt;
        return it->second;
    }

    std::size_t size() const { return map_.size(); }

private:
    std::unordered_map<Asn, NetworkCategory> map_;
};

/// Reads an `asn,label` CSV with verbatim PeeringDB labels.
inline CategoryMap load_categories(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.empty() || trim(lines[0]) != "asn,label")
        throw Error(Errc::MalformedRow, path + ": expected header 'asn,label'");
    CategoryMap map;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        std::string_view line = trim(lines[i]);
        if (line.empty()) continue;
        const std::size_t comma = line.find(',');
        const auto asn = comma == std::string_view::npos ? std::nullopt : parse_int<Asn>(line.substr(0, comma));
        if (!asn) throw Error(Errc::MalformedRow, path + ":" + std::to_string(i + 1) + ": bad asn");
        std::string_view label = trim(line.substr(comma + 1));
        if (label.size() >= 2 && label.front() == '"' && label.back() == '"') label = label.substr(1, label.size() - 2);
        map.set(*asn, category_from_peeringdb(label));
    }
    return map;
}

inline NetworkCategory categorize(const Address& a, const PrefixTable& t, const CategoryMap& c) {
    const auto asn = t.lookup_origin(a);
    if (!asn) return NetworkCategory::Unknown;
    return c.find(*asn).value_or(NetworkCategory::Others);
}

/// Partitions the input by category; each list keeps input order. Only
/// non-empty categories appear.
inline std::map<NetworkCategory, AddressList> split_by_category(std::span<const Address> addresses,
                                                                const PrefixTable& t, const CategoryMap& c) {
    std::map<NetworkCategory, AddressList> out;
    for (const Address& a : addresses) out[categorize(a, t, c)].push_back(a);
    return out;
}

/// Picks the routing snapshot for `scan_date` among files named
/// `YYYY-MM-DD*.csv`: the exact date if present, else the nearest earlier
/// one. Returns nothing if every snapshot is later than the scan.
inline std::optional<std::filesystem::path> select_snapshot(const std::filesystem::path& dir, Day scan_date) {
    std::optional<std::pair<Day, std::filesystem::path>> best;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".csv") continue;
        const std::string name = entry.path().filename().string();
        const auto day = parse_date(std::string_view(name).substr(0, 10));
        if (!day || *day > scan_date) continue;
        if (!best || *day > best->first || (*day == best->first && entry.path() < best->second))
            best.emplace(*day, entry.path());
    }
    if (!best) return std::nullopt;
    return best->second;
}

} // namespace v6forge
