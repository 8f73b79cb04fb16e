#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "v6forge/address.hpp"
#include "v6forge/prefix_trie.hpp"
#include "v6forge/rng.hpp"
#include "v6forge/textio.hpp"

namespace v6forge {

using PerProtocol = std::map<Address, ProtocolSet>;

/// Reads a prefix-list file (one CIDR per line, blank lines and `#`
/// comments allowed).
inline std::vector<Prefix> read_prefix_list(const std::string& path) {
    std::vector<Prefix> out;
    const auto lines = read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string_view line = lines[i];
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        try {
            out.push_back(parse_prefix(line));
        } catch (const Error& e) {
            throw Error(Errc::MalformedPrefix, path + ":" + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return out;
}

inline void write_prefix_list(const std::string& path, std::span<const Prefix> prefixes) {
    std::string out;
    for (const Prefix& p : prefixes) out += format_prefix(p) + "\n";
    write_file(path, out);
}

/// Keeps only the addresses for which `keep` holds, preserving order.
template <typename Pred>
AddressList filter_addresses(std::span<const Address> in, Pred&& keep) {
    AddressList out;
    out.reserve(in.size());
    for (const Address& a : in)
        if (keep(a)) out.push_back(a);
    return out;
}

/// Opt-out prefixes. Stored normalized: a prefix nested in another retained
/// prefix is dropped.
class Blocklist {
public:
    Blocklist() = default;
    explicit Blocklist(std::vector<Prefix> prefixes) {
        std::sort(prefixes.begin(), prefixes.end(), [](const Prefix& a, const Prefix& b) {
            return a.length() != b.length() ? a.length() < b.length() : a.base() < b.base();
        });
        for (const Prefix& p : prefixes) {
            if (set_.covers(p.base())) continue;  // shorter or equal prefix already covers it
            set_.insert(p);
            prefixes_.push_back(p);
        }
        std::sort(prefixes_.begin(), prefixes_.end());
    }

    const std::vector<Prefix>& prefixes() const { return prefixes_; }
    bool covers(const Address& a) const { return set_.covers(a); }

private:
    std::vector<Prefix> prefixes_;
    PrefixSet set_;
};

inline AddressList apply_blocklist(std::span<const Address> addresses, const Blocklist& b) {
    return filter_addresses(addresses, [&](const Address& a) { return !b.covers(a); });
}

struct AliasVerdict {
    Prefix prefix;
    bool aliased = false;
    int probes_sent = 0;
    int probes_answered = 0;

    bool operator==(const AliasVerdict&) const = default;
};

/// Probe targets for one candidate prefix. The nibble right after the
/// prefix takes a different value per probe (a random sample of the 16
/// values, re-drawn once all 16 are used); every later nibble is random.
inline std::vector<Address> alias_probe_targets(const Prefix& p, int probes, std::uint64_t rng_seed) {
    if (p.length() > 124 || p.length() % 4 != 0)
        throw Error(Errc::MalformedPrefix, "alias candidate must be a nibble-aligned prefix of length <= 124: " +
                                               format_prefix(p));
    const std::uint64_t stream = mix64(p.base().hi()) ^ mix64(p.base().lo() + 1) ^ static_cast<std::uint64_t>(p.length());
    Rng rng(rng_seed, stream);
    const int pos = p.length() / 4;
    std::vector<std::uint8_t> values;
    std::vector<Address> targets;
    targets.reserve(static_cast<std::size_t>(std::max(probes, 0)));
    for (int i = 0; i < probes; ++i) {
        if (values.empty()) {
            values.resize(16);
            for (std::uint8_t v = 0; v < 16; ++v) values[v] = v;
            rng.shuffle(values);
        }
        Address t = p.base().with_nibble(pos, values.back());
        values.pop_back();
        for (int n = pos + 1; n < Address::kNibbles; ++n) t = t.with_nibble(n, static_cast<std::uint8_t>(rng.below(16)));
        targets.push_back(t);
    }
    return targets;
}

/// Single-level aliased prefix detection. `prober(address)` answers ICMP
/// reachability and may throw Error{ProbeFailure}; that aborts only the
/// affected prefix (not aliased, probes sent so far recorded). A prefix is
/// aliased iff every probe is answered. Verdicts come back sorted by prefix.
template <typename Prober>
std::vector<AliasVerdict> detect_aliased(Prober&& prober, std::span<const Prefix> candidates,
                                         int probes_per_level = 16, std::uint64_t rng_seed = 0) {
    std::set<Prefix> unique(candidates.begin(), candidates.end());
    std::vector<AliasVerdict> out;
    out.reserve(unique.size());
    for (const Prefix& p : unique) {
        AliasVerdict v{p, false, 0, 0};
        bool failed = false;
        for (const Address& t : alias_probe_targets(p, probes_per_level, rng_seed)) {
            ++v.probes_sent;
            try {
                if (prober(t)) ++v.probes_answered;
            } catch (const Error& e) {
                if (e.code() != Errc::ProbeFailure) throw;
                failed = true;
                break;
            }
        }
        v.aliased = !failed && v.probes_sent > 0 && v.probes_answered == v.probes_sent;
        out.push_back(v);
    }
    return out;
}

/// Distinct covering prefixes of `length` bits (default /64), sorted.
inline std::vector<Prefix> alias_candidates(std::span<const Address> addresses, int length = 64) {
    std::set<Prefix> s;
    for (const Address& a : addresses) s.insert(Prefix(a, length));
    return {s.begin(), s.end()};
}

inline AddressList filter_aliased(std::span<const Address> addresses, std::span<const AliasVerdict> detected,
                                  std::span<const Prefix> known) {
    PrefixSet set;
    for (const auto& v : detected)
        if (v.aliased) set.insert(v.prefix);
    for (const Prefix& p : known) set.insert(p);
    if (set.empty()) return {addresses.begin(), addresses.end()};
    return filter_addresses(addresses, [&](const Address& a) { return !set.covers(a); });
}

// --- DNS injection -----------------------------------------------------

struct DnsResponse {
    std::string query_name;
    std::vector<Address> answers;
    Address responder;
};

enum class DnsVerdict { Legit, Injected };

inline Prefix teredo_prefix() { return Prefix(Address(0x2001000000000000ULL, 0), 32); }

/// Default injection pool: Teredo only. Operators extend it with a file.
inline std::vector<Prefix> default_injection_prefixes() { return {teredo_prefix()}; }

/// Injected iff any answer lies in an injection prefix. Responder and query
/// name play no role.
inline DnsVerdict gfw_classify(const DnsResponse& r, const PrefixSet& injection_prefixes) {
    for (const Address& a : r.answers)
        if (injection_prefixes.covers(a)) return DnsVerdict::Injected;
    return DnsVerdict::Legit;
}

inline DnsVerdict gfw_classify(const DnsResponse& r, std::span<const Prefix> injection_prefixes) {
    return gfw_classify(r, PrefixSet(injection_prefixes));
}

/// IPv4 address carried in the last 32 bits of a Teredo-prefix address,
/// read as-is (no obfuscation XOR).
inline std::string teredo_decode(const Address& a) {
    if (!teredo_prefix().contains(a)) throw Error(Errc::NotTeredo, format_address(a) + " is not in 2001::/32");
    const auto v4 = static_cast<std::uint32_t>(a.lo());
    return std::to_string(v4 >> 24) + "." + std::to_string((v4 >> 16) & 0xff) + "." + std::to_string((v4 >> 8) & 0xff) +
           "." + std::to_string(v4 & 0xff);
}

/// Teredo-prefix address with `v4` in the last 32 bits; `middle` fills bits
/// 32..95.
inline Address teredo_encode(std::uint32_t v4, std::uint64_t middle = 0) {
    const std::uint64_t hi = 0x2001000000000000ULL | (middle >> 32);
    const std::uint64_t lo = (middle << 32) | v4;
    return {hi, lo};
}

/// Reads `responder,query_name,answers` rows; answers are `;`-separated.
inline std::vector<DnsResponse> load_dns_responses(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.empty() || trim(lines[0]) != "responder,query_name,answers")
        throw Error(Errc::MalformedRow, path + ": expected header 'responder,query_name,answers'");
    std::vector<DnsResponse> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        const auto cols = split(lines[i], ',');
        const auto where = path + ":" + std::to_string(i + 1);
        if (cols.size() != 3) throw Error(Errc::MalformedRow, where + ": expected 3 columns");
        DnsResponse r;
        r.responder = parse_address(trim(cols[0]));
        r.query_name = std::string(trim(cols[1]));
        if (!trim(cols[2]).empty())
            for (auto tok : split(cols[2], ';')) r.answers.push_back(parse_address(trim(tok)));
        out.push_back(std::move(r));
    }
    return out;
}

inline std::string format_dns_answers(const DnsResponse& r) {
    std::string s;
    for (std::size_t i = 0; i < r.answers.size(); ++i) {
        if (i) s += ';';
        s += format_address(r.answers[i]);
    }
    return s;
}

/// Drops UDP/53 from every responder whose DNS answer was injected, so that
/// a forged reply does not count as liveness.
inline std::size_t strip_injected_dns(PerProtocol& per_protocol, const std::map<Address, DnsResponse>& dns,
                                      const PrefixSet& injection_prefixes) {
    std::size_t stripped = 0;
    for (auto& [addr, protos] : per_protocol) {
        if (!protos.contains(Protocol::UDP53)) continue;
        auto it = dns.find(addr);
        if (it != dns.end() && gfw_classify(it->second, injection_prefixes) == DnsVerdict::Injected) {
            protos.erase(Protocol::UDP53);
            ++stripped;
        }
    }
    return stripped;
}

/// Addresses that answer something other than DNS alone. Unresponsive
/// entries and DNS-only responders are dropped.
inline AddressList dns_only_filter(const PerProtocol& per_protocol) {
    AddressList out;
    for (const auto& [addr, protos] : per_protocol)
        if (!protos.empty() && protos != ProtocolSet{Protocol::UDP53}) out.push_back(addr);
    return out;
}

} // namespace v6forge
