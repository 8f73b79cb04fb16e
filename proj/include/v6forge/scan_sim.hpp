#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
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
#include "v6forge/filters.hpp"
#include "v6forge/history.hpp"
#include "v6forge/prefix_trie.hpp"
#include "v6forge/rng.hpp"
#include "v6forge/textio.hpp"

namespace v6forge::sim {

enum class PatternKind { LowByte, Structured, Random };

/// How a network's hosts behave across a synthetic scan history.
enum class Behavior { Stable, OneShot, Flaky };

using ProtocolProfile = std::array<double, 5>;  // indexed by Protocol

struct NetworkSpec {
    Prefix prefix;
    Asn asn = 0;
    NetworkCategory category = NetworkCategory::Others;
    std::uint64_t host_count = 0;
    PatternKind pattern = PatternKind::Random;
    std::vector<std::uint8_t> suffix;  // Structured: fixed trailing nibbles
    ProtocolProfile profile{};
    bool aliased = false;
    /// Every UDP/53 probe into the prefix draws a forged DNS answer.
    bool dns_injection = false;
    Behavior behavior = Behavior::Stable;
    double flaky_up = 0.5;
};

struct PopulationConfig {
    std::vector<NetworkSpec> networks;
    std::uint64_t rng_seed = 0;
};

inline std::string_view to_string(PatternKind k) {
    switch (k) {
    case PatternKind::LowByte: return "lowbyte";
    case PatternKind::Structured: return "structured";
    case PatternKind::Random: return "random";
    }
    return "?";
}

namespace detail {

inline ProtocolProfile parse_profile(std::string_view text, const std::string& where) {
    ProtocolProfile prof{};
    for (auto item : split(text, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        const auto colon = item.find(':');
        const auto proto = colon == std::string_view::npos ? std::nullopt : parse_protocol(trim(item.substr(0, colon)));
        const auto prob = colon == std::string_view::npos ? std::nullopt : parse_double(item.substr(colon + 1));
        if (!proto || !prob) throw Error(Errc::ConfigInvalid, where + ": bad protocol entry '" + std::string(item) + "'");
        prof[static_cast<int>(*proto)] = *prob;
    }
    return prof;
}

inline bool parse_bool(const std::optional<std::string>& v, bool fallback, const std::string& where) {
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw Error(Errc::ConfigInvalid, where + ": expected boolean, got '" + *v + "'");
}

} // namespace detail

/// Checks the config invariants: disjoint prefixes, probabilities in
/// [0,1], patterns that fit their prefix, one category per ASN.
inline void validate(const PopulationConfig& cfg) {
    std::vector<Prefix> sorted;
    std::map<Asn, NetworkCategory> asn_cat;
    for (const auto& n : cfg.networks) {
        const std::string where = "network " + format_prefix(n.prefix);
        for (double p : n.profile)
            if (!(p >= 0.0 && p <= 1.0)) throw Error(Errc::ConfigInvalid, where + ": probability outside [0,1]");
        if (!(n.flaky_up >= 0.0 && n.flaky_up <= 1.0)) throw Error(Errc::ConfigInvalid, where + ": flaky rate outside [0,1]");
        if (n.category != NetworkCategory::Unknown) {
            if (n.asn == 0) throw Error(Errc::ConfigInvalid, where + ": asn required");
            auto [it, fresh] = asn_cat.emplace(n.asn, n.category);
            if (!fresh && it->second != n.category)
                throw Error(Errc::ConfigInvalid, where + ": asn " + std::to_string(n.asn) + " has two categories");
        }
        const int free_bits = 128 - n.prefix.length();
        if (n.pattern == PatternKind::LowByte) {
            const int index_bits = n.prefix.length() < 64 ? 64 - n.prefix.length() : free_bits - 1;
            if (index_bits < 64 && n.host_count > (std::uint64_t{1} << index_bits))
                throw Error(Errc::ConfigInvalid, where + ": too many lowbyte hosts for prefix");
        }
        if (n.pattern == PatternKind::Structured) {
            if (n.suffix.empty()) throw Error(Errc::ConfigInvalid, where + ": structured pattern needs a suffix");
            if (n.prefix.length() > 64 || n.suffix.size() > 16)
                throw Error(Errc::ConfigInvalid, where + ": structured pattern needs prefix <= /64 and suffix <= 16 nibbles");
            const int subnet_bits = 64 - n.prefix.length();
            if (subnet_bits < 64 && n.host_count > (std::uint64_t{1} << subnet_bits))
                throw Error(Errc::ConfigInvalid, where + ": too many structured hosts for prefix");
        }
        if (n.pattern == PatternKind::Random && free_bits < 64 && n.host_count > (std::uint64_t{1} << free_bits) / 2)
            throw Error(Errc::ConfigInvalid, where + ": too many random hosts for prefix");
        sorted.push_back(n.prefix);
    }
    std::sort(sorted.begin(), sorted.end(), [](const Prefix& a, const Prefix& b) {
        return a.base() != b.base() ? a.base() < b.base() : a.length() < b.length();
    });
    for (std::size_t i = 1; i < sorted.size(); ++i)
        if (sorted[i - 1].contains(sorted[i]))
            throw Error(Errc::ConfigInvalid, "overlapping networks " + format_prefix(sorted[i - 1]) + " and " +
                                                 format_prefix(sorted[i]));
}

/// Parses the population file:
///
///     [population]
///     rng_seed = 7
///     [profile]               # default protocol profile per category
///     category = ISP
///     protocols = ICMP:1.0,TCP80:0.03
///     [network]
///     prefix = 2001:db8::/32
///     asn = 64500
///     category = ISP
///     host_count = 4096
///     pattern = lowbyte | random | structured:53
///     aliased = false
///     dns_injection = false
///     behavior = stable | oneshot | flaky:0.4
///     protocols = ...         # optional, overrides the category profile
inline PopulationConfig parse_population(std::string_view text, const std::string& origin = "<population>") {
    PopulationConfig cfg;
    const auto sections = parse_config_text(text, origin);
    std::map<NetworkCategory, ProtocolProfile> profiles;
    for (const auto& s : sections) {
        const std::string where = origin + ":" + std::to_string(s.line);
        if (s.name == "profile") {
            const auto cat = parse_category(s.get("category").value_or(""));
            if (!cat) throw Error(Errc::ConfigInvalid, where + ": profile needs a valid category");
            profiles[*cat] = detail::parse_profile(s.get("protocols").value_or(""), where);
        }
    }
    for (const auto& s : sections) {
        const std::string where = origin + ":" + std::to_string(s.line);
        if (s.name == "population") {
            const auto seed = parse_int<std::uint64_t>(s.get("rng_seed").value_or("0"));
            if (!seed) throw Error(Errc::ConfigInvalid, where + ": bad rng_seed");
            cfg.rng_seed = *seed;
        } else if (s.name == "network") {
            NetworkSpec n;
            try {
                n.prefix = parse_prefix(s.get("prefix").value_or(""));
            } catch (const Error& e) {
                throw Error(Errc::ConfigInvalid, where + ": " + e.what());
            }
            const auto cat = parse_category(s.get("category").value_or(""));
            if (!cat) throw Error(Errc::ConfigInvalid, where + ": bad category");
            n.category = *cat;
            const auto asn = parse_int<Asn>(s.get("asn").value_or("0"));
            const auto hosts = parse_int<std::uint64_t>(s.get("host_count").value_or("0"));
            if (!asn || !hosts) throw Error(Errc::ConfigInvalid, where + ": bad asn or host_count");
            n.asn = *asn;
            n.host_count = *hosts;
            const std::string pattern = s.get("pattern").value_or("random");
            if (pattern == "lowbyte") {
                n.pattern = PatternKind::LowByte;
            } else if (pattern == "random") {
                n.pattern = PatternKind::Random;
            } else if (pattern.starts_with("structured:")) {
                n.pattern = PatternKind::Structured;
                for (char c : pattern.substr(11)) {
                    const int h = v6forge::detail::hex_value(c);
                    if (h < 0) throw Error(Errc::ConfigInvalid, where + ": bad structured suffix");
                    n.suffix.push_back(static_cast<std::uint8_t>(h));
                }
            } else {
                throw Error(Errc::ConfigInvalid, where + ": unknown pattern '" + pattern + "'");
            }
            if (auto p = s.get("protocols")) {
                n.profile = detail::parse_profile(*p, where);
            } else if (auto it = profiles.find(n.category); it != profiles.end()) {
                n.profile = it->second;
            } else {
                throw Error(Errc::ConfigInvalid, where + ": no protocol profile for category");
            }
            n.aliased = detail::parse_bool(s.get("aliased"), false, where);
            n.dns_injection = detail::parse_bool(s.get("dns_injection"), false, where);
            const std::string behavior = s.get("behavior").value_or("stable");
            if (behavior == "stable") {
                n.behavior = Behavior::Stable;
            } else if (behavior == "oneshot") {
                n.behavior = Behavior::OneShot;
            } else if (behavior.starts_with("flaky:")) {
                n.behavior = Behavior::Flaky;
                const auto p = parse_double(behavior.substr(6));
                if (!p) throw Error(Errc::ConfigInvalid, where + ": bad flaky rate");
                n.flaky_up = *p;
            } else {
                throw Error(Errc::ConfigInvalid, where + ": unknown behavior '" + behavior + "'");
            }
            cfg.networks.push_back(std::move(n));
        } else if (s.name != "profile" && !(s.name.empty() && s.values.empty())) {
            throw Error(Errc::ConfigInvalid, where + ": unknown section '" + s.name + "'");
        }
    }
    validate(cfg);
    return cfg;
}

inline PopulationConfig load_population(const std::string& path) { return parse_population(read_file(path), path); }

/// Synthetic Internet: materialized responsive hosts plus rule-based
/// aliased and DNS-injecting prefixes. Immutable once built.
class GroundTruth {
public:
    const std::map<Address, ProtocolSet>& responsive() const { return responsive_; }
    const std::vector<Prefix>& aliased_prefixes() const { return aliased_; }
    const std::vector<Prefix>& injection_networks() const { return injecting_; }
    const std::vector<NetworkSpec>& networks() const { return networks_; }
    /// Materialized hosts of network `i` (including ones that drew no
    /// protocol), sorted.
    const std::vector<Address>& hosts(std::size_t i) const { return hosts_[i]; }

    std::optional<std::size_t> network_of(const Address& a) const {
        auto hit = index_.longest_match(a);
        if (!hit) return std::nullopt;
        return hit->first;
    }

    bool probe(const Address& a, Protocol p) const {
        if (p == Protocol::ICMP && aliased_set_.covers(a)) return true;
        if (p == Protocol::UDP53 && injecting_set_.covers(a)) return true;
        auto it = responsive_.find(a);
        return it != responsive_.end() && it->second.contains(p);
    }

    ProtocolSet probe_all(const Address& a, ProtocolSet protocols) const {
        ProtocolSet out;
        for (Protocol p : kAllProtocols)
            if (protocols.contains(p) && probe(a, p)) out.insert(p);
        return out;
    }

    /// Answer section a DNS probe to `a` would get: a forged Teredo answer
    /// inside injecting networks, a fixed legitimate answer otherwise.
    DnsResponse dns_answer(const Address& a, std::string_view query = "www.google.com") const {
        DnsResponse r;
        r.responder = a;
        r.query_name = std::string(query);
        if (injecting_set_.covers(a)) {
            const auto v4 = static_cast<std::uint32_t>(mix64(a.hi() ^ mix64(a.lo())) % kInjectionPool.size());
            r.answers.push_back(teredo_encode(kInjectionPool[v4]));
        } else {
            r.answers.push_back(Address(0x2a00145040010000ULL + 0x82b, 0x2004));
        }
        return r;
    }

    /// Writes rib.csv, categories.csv, hosts.txt (responsive hosts) and
    /// aliased.txt into `dir`.
    void write_side_files(const std::filesystem::path& dir) const {
        std::filesystem::create_directories(dir);
        std::string rib = "prefix,asn\n";
        std::map<Asn, NetworkCategory> cats;
        for (const auto& n : networks_) {
            if (n.category == NetworkCategory::Unknown) continue;
            rib += format_prefix(n.prefix) + "," + std::to_string(n.asn) + "\n";
            if (n.category != NetworkCategory::Others) cats[n.asn] = n.category;
        }
        std::string cat_csv = "asn,label\n";
        for (const auto& [asn, c] : cats) cat_csv += std::to_string(asn) + "," + std::string(peeringdb_label(c)) + "\n";
        write_file((dir / "rib.csv").string(), rib);
        write_file((dir / "categories.csv").string(), cat_csv);
        std::vector<Address> hosts;
        for (const auto& [a, _] : responsive_) hosts.push_back(a);
        write_address_list((dir / "hosts.txt").string(), hosts);
        write_prefix_list((dir / "aliased.txt").string(), aliased_);
    }

    PrefixTable rib() const {
        PrefixTable t;
        for (const auto& n : networks_)
            if (n.category != NetworkCategory::Unknown) t.add(n.prefix, n.asn);
        return t;
    }

    CategoryMap categories() const {
        CategoryMap c;
        for (const auto& n : networks_)
            if (n.category != NetworkCategory::Unknown && n.category != NetworkCategory::Others) c.set(n.asn, n.category);
        return c;
    }

private:
    friend GroundTruth build_population(const PopulationConfig& cfg);

    static constexpr std::array<std::uint32_t, 8> kInjectionPool{0x1f0d4801, 0x1f0d5001, 0x9df0f123, 0x9df0f812,
                                                                0x45ab0c0d, 0x45ab1d2e, 0xb3e5a011, 0xb3e5a122};

    std::vector<NetworkSpec> networks_;
    std::vector<std::vector<Address>> hosts_;
    std::map<Address, ProtocolSet> responsive_;
    std::vector<Prefix> aliased_;
    std::vector<Prefix> injecting_;
    PrefixSet aliased_set_;
    PrefixSet injecting_set_;
    PrefixTrie<std::size_t> index_;
};

namespace detail {

/// Interface-identifier-free address: `index` placed in the subnet bits
/// between the prefix and bit 64.
inline Address with_subnet(const Prefix& p, std::uint64_t index) {
    const int bits = 64 - p.length();
    const std::uint64_t mask = bits >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << bits) - 1);
    return Address(p.base().hi() | (index & mask), 0);
}

inline std::vector<Address> materialize_hosts(const NetworkSpec& n, Rng& rng) {
    std::vector<Address> hosts;
    hosts.reserve(n.host_count);
    const Prefix& p = n.prefix;
    if (n.pattern == PatternKind::LowByte) {
        for (std::uint64_t i = 0; i < n.host_count; ++i) {
            if (p.length() < 64)
                hosts.push_back(Address(with_subnet(p, i).hi(), 1));
            else
                hosts.push_back(Address(p.base().hi(), p.base().lo() | (i + 1)));
        }
        return hosts;
    }
    std::unordered_set<Address> seen;
    const Address net_mask = Address(~0ULL, ~0ULL).masked(p.length());
    while (hosts.size() < n.host_count) {
        Address a;
        if (n.pattern == PatternKind::Structured) {
            a = with_subnet(p, rng.next());
            for (std::size_t k = 0; k < n.suffix.size(); ++k)
                a = a.with_nibble(static_cast<int>(Address::kNibbles - n.suffix.size() + k), n.suffix[k]);
        } else {
            const std::uint64_t hi = rng.next(), lo = rng.next();
            a = Address(p.base().hi() | (hi & ~net_mask.hi()), p.base().lo() | (lo & ~net_mask.lo()));
        }
        if (seen.insert(a).second) hosts.push_back(a);
    }
    std::sort(hosts.begin(), hosts.end());
    return hosts;
}

} // namespace detail

/// Materializes the configured population. Each host draws one uniform
/// number u and answers protocol p iff u < profile[p]; responses across
/// protocols are therefore nested (a host answering a rarer protocol also
/// answers the commoner ones).
inline GroundTruth build_population(const PopulationConfig& cfg) {
    validate(cfg);
    GroundTruth gt;
    gt.networks_ = cfg.networks;
    for (std::size_t i = 0; i < cfg.networks.size(); ++i) {
        const auto& n = cfg.networks[i];
        Rng rng(cfg.rng_seed, i);
        auto hosts = detail::materialize_hosts(n, rng);
        Rng proto_rng(cfg.rng_seed, 0x1000000 + i);
        for (const Address& a : hosts) {
            const double u = proto_rng.unit();
            ProtocolSet s;
            for (Protocol p : kAllProtocols)
                if (u < n.profile[static_cast<int>(p)]) s.insert(p);
            if (!s.empty()) gt.responsive_.emplace(a, s);
        }
        gt.hosts_.push_back(std::move(hosts));
        if (n.aliased) {
            gt.aliased_.push_back(n.prefix);
            gt.aliased_set_.insert(n.prefix);
        }
        if (n.dns_injection) {
            gt.injecting_.push_back(n.prefix);
            gt.injecting_set_.insert(n.prefix);
        }
        gt.index_.insert(n.prefix, i);
    }
    return gt;
}

inline bool probe(const GroundTruth& gt, const Address& a, Protocol p) { return gt.probe(a, p); }

struct ScanResult {
    /// Responding addresses only; probed addresses without any answer are
    /// absent here but present in `probed`.
    PerProtocol per_protocol;
    std::vector<Address> probed;  // sorted, distinct
    /// DNS answer sections of UDP/53 responders.
    std::map<Address, DnsResponse> dns;

    bool was_probed(const Address& a) const { return std::binary_search(probed.begin(), probed.end(), a); }

    ProtocolSet protocols_of(const Address& a) const {
        auto it = per_protocol.find(a);
        return it == per_protocol.end() ? ProtocolSet{} : it->second;
    }

    bool operator==(const ScanResult& o) const {
        if (per_protocol != o.per_protocol || probed != o.probed || dns.size() != o.dns.size()) return false;
        for (const auto& [a, r] : dns) {
            auto it = o.dns.find(a);
            if (it == o.dns.end() || it->second.answers != r.answers) return false;
        }
        return true;
    }
};

inline ScanResult scan(const GroundTruth& gt, std::span<const Address> targets, ProtocolSet protocols = ProtocolSet::all()) {
    ScanResult r;
    r.probed.assign(targets.begin(), targets.end());
    std::sort(r.probed.begin(), r.probed.end());
    r.probed.erase(std::unique(r.probed.begin(), r.probed.end()), r.probed.end());
    for (const Address& a : r.probed) {
        const ProtocolSet s = gt.probe_all(a, protocols);
        if (s.empty()) continue;
        r.per_protocol.emplace(a, s);
        if (s.contains(Protocol::UDP53)) r.dns.emplace(a, gt.dns_answer(a));
    }
    return r;
}

/// Probed-list path that accompanies a scan CSV: `scan.csv` -> `scan.probed`.
inline std::filesystem::path probed_path(const std::filesystem::path& csv) {
    auto p = csv;
    p.replace_extension(".probed");
    return p;
}

/// Writes zmap-style CSV (`saddr,protocol,answers`, one row per positive
/// response, answers only on UDP53 rows) plus the `.probed` list.
inline void export_scan(const std::filesystem::path& path, const ScanResult& r) {
    std::string out = "saddr,protocol,answers\n";
    for (const auto& [a, s] : r.per_protocol) {
        const std::string addr = format_address(a);
        for (Protocol p : kAllProtocols) {
            if (!s.contains(p)) continue;
            out += addr + "," + std::string(to_string(p)) + ",";
            if (p == Protocol::UDP53)
                if (auto it = r.dns.find(a); it != r.dns.end()) out += format_dns_answers(it->second);
            out += "\n";
        }
    }
    write_file(path.string(), out);
    write_address_list(probed_path(path).string(), r.probed);
}

/// Reads a scan CSV. The header must name `saddr` and `protocol`; an
/// `answers` column is optional and other columns are ignored.
inline ScanResult import_scan(const std::filesystem::path& path) {
    const auto probed_file = probed_path(path);
    if (!std::filesystem::exists(probed_file))
        throw Error(Errc::MissingProbedFile, "missing " + probed_file.string());
    ScanResult r;
    r.probed = read_address_list(probed_file.string());
    std::sort(r.probed.begin(), r.probed.end());
    r.probed.erase(std::unique(r.probed.begin(), r.probed.end()), r.probed.end());

    const auto lines = read_lines(path.string());
    if (lines.empty()) throw Error(Errc::MalformedRow, path.string() + ": missing header");
    const auto header = split(lines[0], ',');
    int col_addr = -1, col_proto = -1, col_answers = -1;
    for (int i = 0; i < static_cast<int>(header.size()); ++i) {
        const auto h = trim(header[i]);
        if (h == "saddr") col_addr = i;
        if (h == "protocol") col_proto = i;
        if (h == "answers") col_answers = i;
    }
    if (col_addr < 0 || col_proto < 0)
        throw Error(Errc::MalformedRow, path.string() + ": header needs saddr and protocol columns");
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        const auto cols = split(lines[i], ',');
        const std::string where = path.string() + ":" + std::to_string(i + 1);
        const auto need = static_cast<std::size_t>(std::max({col_addr, col_proto, col_answers}) + 1);
        if (cols.size() < need) throw Error(Errc::MalformedRow, where + ": too few columns");
        const auto addr = try_parse_address(trim(cols[col_addr]));
        const auto proto = parse_protocol(trim(cols[col_proto]));
        if (!addr || !proto) throw Error(Errc::MalformedRow, where + ": bad address or protocol");
        if (!r.was_probed(*addr)) throw Error(Errc::MalformedRow, where + ": response from unprobed address");
        r.per_protocol[*addr].insert(*proto);
        if (col_answers >= 0 && *proto == Protocol::UDP53 && !trim(cols[col_answers]).empty()) {
            DnsResponse d;
            d.responder = *addr;
            for (auto tok : split(cols[col_answers], ';')) {
                const auto ans = try_parse_address(trim(tok));
                if (!ans) throw Error(Errc::MalformedRow, where + ": bad DNS answer");
                d.answers.push_back(*ans);
            }
            r.dns[*addr] = std::move(d);
        }
    }
    return r;
}

/// Synthetic weekly history over the population's responsive hosts.
/// Stable hosts appear at a random snapshot in the first half and stay;
/// one-shot hosts appear in exactly one snapshot; flaky hosts appear like
/// stable ones and are then up with the configured probability.
inline ScanHistory simulate_history(const GroundTruth& gt, Day start, std::size_t snapshot_count, int cadence_days,
                                    Day analysis_date, std::uint64_t rng_seed) {
    if (snapshot_count == 0) throw Error(Errc::NoSnapshots, "snapshot_count must be positive");
    std::vector<ScanSnapshot> snaps(snapshot_count);
    for (std::size_t k = 0; k < snapshot_count; ++k)
        snaps[k].date = start + std::chrono::days{static_cast<long>(k) * cadence_days};
    Rng rng(rng_seed, 0x5747);
    const std::size_t half = std::max<std::size_t>(1, snapshot_count / 2);
    for (const auto& [a, protos] : gt.responsive()) {
        const auto net = gt.network_of(a);
        const NetworkSpec& n = gt.networks()[*net];
        if (n.behavior == Behavior::OneShot) {
            const auto k = rng.below(snapshot_count);
            snaps[k].responsive.insert(a);
            snaps[k].per_protocol[a] = protos;
            continue;
        }
        const auto first = rng.below(half);
        for (std::size_t k = first; k < snapshot_count; ++k) {
            if (k != first && n.behavior == Behavior::Flaky && !rng.chance(n.flaky_up)) continue;
            snaps[k].responsive.insert(a);
            snaps[k].per_protocol[a] = protos;
        }
    }
    return ScanHistory(std::move(snaps), analysis_date);
}

} // namespace v6forge::sim
