#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "v6forge/address.hpp"
#include "v6forge/rng.hpp"
#include "v6forge/textio.hpp"

namespace v6forge {

/// Shannon entropy of a nibble histogram, base 16 (so in [0, 1]). Counts
/// are summed in sorted order so equal histograms give bit-equal results.
inline double nibble_entropy(std::array<std::uint32_t, 16> counts) {
    std::sort(counts.begin(), counts.end());
    double total = 0;
    for (auto c : counts) total += c;
    if (total == 0) return 0.0;
    double h = 0;
    for (auto c : counts) {
        if (c == 0) continue;
        const double p = c / total;
        h -= p * std::log(p);
    }
    return h / std::log(16.0);
}

inline std::array<std::array<std::uint32_t, 16>, Address::kNibbles> nibble_histograms(std::span<const Address> addrs) {
    std::array<std::array<std::uint32_t, 16>, Address::kNibbles> hist{};
    for (const Address& a : addrs)
        for (int i = 0; i < Address::kNibbles; ++i) ++hist[i][a.nibble(i)];
    return hist;
}

/// Per-position entropy of a set of addresses.
inline std::array<double, Address::kNibbles> nibble_entropies(std::span<const Address> addrs) {
    const auto hist = nibble_histograms(addrs);
    std::array<double, Address::kNibbles> out{};
    for (int i = 0; i < Address::kNibbles; ++i) out[i] = nibble_entropy(hist[i]);
    return out;
}

/// One nibble position of a region template.
struct Slot {
    bool wildcard = false;
    std::uint8_t value = 0;                    // meaningful when fixed
    std::array<std::uint32_t, 16> observed{};  // value multiset over members
};

/// Template of fixed nibbles and wildcards spanning a group of seed
/// addresses.
struct PatternRegion {
    std::array<Slot, Address::kNibbles> slots{};
    std::vector<Address> members;

    int wildcard_count() const {
        return static_cast<int>(std::count_if(slots.begin(), slots.end(), [](const Slot& s) { return s.wildcard; }));
    }

    std::vector<int> wildcard_positions() const {
        std::vector<int> out;
        for (int i = 0; i < Address::kNibbles; ++i)
            if (slots[i].wildcard) out.push_back(i);
        return out;
    }

    /// Address with all fixed slots set and wildcards zero.
    Address fixed_pattern() const {
        Address a;
        for (int i = 0; i < Address::kNibbles; ++i)
            if (!slots[i].wildcard) a = a.with_nibble(i, slots[i].value);
        return a;
    }

    /// Template text, e.g. `20010db8000000000000000000000**1`.
    std::string pattern_string() const {
        static constexpr char kHex[] = "0123456789abcdef";
        std::string s(Address::kNibbles, '*');
        for (int i = 0; i < Address::kNibbles; ++i)
            if (!slots[i].wildcard) s[i] = kHex[slots[i].value];
        return s;
    }

    static PatternRegion from_members(std::vector<Address> members) {
        PatternRegion r;
        const auto hist = nibble_histograms(members);
        for (int i = 0; i < Address::kNibbles; ++i) {
            r.slots[i].observed = hist[i];
            const int distinct = static_cast<int>(std::count_if(hist[i].begin(), hist[i].end(), [](auto c) { return c > 0; }));
            r.slots[i].wildcard = distinct >= 2;
            if (!r.slots[i].wildcard && !members.empty()) r.slots[i].value = members.front().nibble(i);
        }
        r.members = std::move(members);
        return r;
    }
};

/// Recursive space partitioning. A node becomes a region once it holds at
/// most `leaf_max` addresses or cannot be split; otherwise it is split on
/// the nibble with the smallest non-zero entropy (lowest index on ties),
/// one child per observed value. Duplicate seeds are ignored.
inline std::vector<PatternRegion> partition(std::span<const Address> seed, std::size_t leaf_max = 16) {
    if (seed.empty()) throw Error(Errc::EmptySeed, "partition needs a non-empty seed");
    std::vector<Address> root(seed.begin(), seed.end());
    std::sort(root.begin(), root.end());
    root.erase(std::unique(root.begin(), root.end()), root.end());

    std::vector<PatternRegion> regions;
    // Depth-first, children in ascending nibble value: stable region order.
    std::vector<std::vector<Address>> stack;
    stack.push_back(std::move(root));
    while (!stack.empty()) {
        std::vector<Address> node = std::move(stack.back());
        stack.pop_back();
        if (node.size() <= std::max<std::size_t>(leaf_max, 1)) {
            regions.push_back(PatternRegion::from_members(std::move(node)));
            continue;
        }
        const auto ent = nibble_entropies(node);
        int split_at = -1;
        for (int i = 0; i < Address::kNibbles; ++i)
            if (ent[i] > 0 && (split_at < 0 || ent[i] < ent[split_at])) split_at = i;
        if (split_at < 0) {
            regions.push_back(PatternRegion::from_members(std::move(node)));
            continue;
        }
        std::array<std::vector<Address>, 16> children;
        for (const Address& a : node) children[a.nibble(split_at)].push_back(a);
        for (int v = 15; v >= 0; --v)
            if (!children[v].empty()) stack.push_back(std::move(children[v]));
    }
    return regions;
}

namespace detail {

inline std::uint8_t draw_weighted(const std::array<std::uint32_t, 16>& counts, Rng& rng) {
    std::uint64_t total = 0;
    for (auto c : counts) total += c;
    std::uint64_t x = rng.below(total);
    for (std::uint8_t v = 0; v < 16; ++v) {
        if (x < counts[v]) return v;
        x -= counts[v];
    }
    return 15;
}

} // namespace detail

/// Candidate addresses from one region (sorted, distinct).
///
/// Fewer than four wildcards: every combination of all 16 values in each
/// wildcard slot, 16^w addresses, cut down to a uniform random subset when
/// that exceeds `budget`. Otherwise: draw a random member and resample each
/// wildcard from its observed values until `budget` distinct non-member
/// addresses exist or budget*100 draws were spent.
inline std::vector<Address> generate_from_region(const PatternRegion& r, std::uint64_t budget, std::uint64_t rng_seed) {
    Rng rng(rng_seed);
    const auto wild = r.wildcard_positions();
    const int w = static_cast<int>(wild.size());
    std::vector<Address> out;
    if (budget == 0) return out;

    if (w < 4) {
        const std::uint64_t total = std::uint64_t{1} << (4 * w);
        std::vector<std::uint32_t> picks(total);
        std::iota(picks.begin(), picks.end(), 0u);
        if (total > budget) {
            for (std::uint64_t i = 0; i < budget; ++i) std::swap(picks[i], picks[i + rng.below(total - i)]);
            picks.resize(budget);
        }
        const Address base = r.fixed_pattern();
        out.reserve(picks.size());
        for (std::uint32_t code : picks) {
            Address a = base;
            for (int k = 0; k < w; ++k) a = a.with_nibble(wild[k], static_cast<std::uint8_t>((code >> (4 * (w - 1 - k))) & 0xf));
            out.push_back(a);
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    const std::unordered_set<Address> members(r.members.begin(), r.members.end());
    std::unordered_set<Address> produced;
    const std::uint64_t max_draws = budget * 100;
    for (std::uint64_t draw = 0; draw < max_draws && produced.size() < budget; ++draw) {
        Address a = r.members[rng.below(r.members.size())];
        for (int pos : wild) a = a.with_nibble(pos, detail::draw_weighted(r.slots[pos].observed, rng));
        if (!members.contains(a)) produced.insert(a);
    }
    out.assign(produced.begin(), produced.end());
    std::sort(out.begin(), out.end());
    return out;
}

/// Output of a generator: sorted, distinct, disjoint from its seed set.
struct CandidateSet {
    std::vector<Address> addresses;
    std::string algorithm;
    std::string seed_label;
    std::uint64_t budget_used = 0;
    /// Parameters and provenance notes, written to the `.meta` sidecar.
    std::map<std::string, std::string> meta;

    std::size_t size() const { return addresses.size(); }
};

/// Removes seed addresses and duplicates from a raw generator output.
inline CandidateSet finalize(std::span<const Address> raw, std::span<const Address> seed, const std::string& label) {
    const std::unordered_set<Address> seeds(seed.begin(), seed.end());
    CandidateSet cs;
    cs.seed_label = label;
    cs.addresses.reserve(raw.size());
    for (const Address& a : raw)
        if (!seeds.contains(a)) cs.addresses.push_back(a);
    std::sort(cs.addresses.begin(), cs.addresses.end());
    cs.addresses.erase(std::unique(cs.addresses.begin(), cs.addresses.end()), cs.addresses.end());
    cs.budget_used = cs.addresses.size();
    return cs;
}

namespace detail {

inline void check_seed_disjoint(const CandidateSet& cs, std::span<const Address> seed) {
    const std::unordered_set<Address> seeds(seed.begin(), seed.end());
    for (const Address& a : cs.addresses)
        if (seeds.contains(a)) throw std::logic_error("candidate set intersects its seed: " + format_address(a));
}

} // namespace detail

/// Splits `budget` across regions in proportion to their member counts;
/// the rounding remainder goes one unit each to the largest regions.
inline std::vector<std::uint64_t> allocate_budget(const std::vector<PatternRegion>& regions, std::uint64_t budget) {
    std::vector<std::uint64_t> quota(regions.size(), 0);
    std::uint64_t total = 0;
    for (const auto& r : regions) total += r.members.size();
    if (total == 0) return quota;
    std::uint64_t assigned = 0;
    for (std::size_t i = 0; i < regions.size(); ++i) {
        quota[i] = static_cast<std::uint64_t>((static_cast<unsigned __int128>(budget) * regions[i].members.size()) / total);
        assigned += quota[i];
    }
    std::vector<std::size_t> order(regions.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return regions[a].members.size() > regions[b].members.size();
    });
    for (std::size_t k = 0; assigned < budget; k = (k + 1) % order.size(), ++assigned) ++quota[order[k]];
    return quota;
}

struct DenseParams {
    std::uint64_t budget = 100'000;
    std::uint64_t rng_seed = 0;
    std::size_t leaf_max = 16;
};

/// Dense-region generator: partition the seed, then generate inside every
/// region with its share of the budget. Region `i` uses the random stream
/// derived from (rng_seed, i).
inline CandidateSet dense_generate(std::span<const Address> seed, const DenseParams& params,
                                   const std::string& seed_label = "seed") {
    const auto regions = partition(seed, params.leaf_max);
    const auto quota = allocate_budget(regions, params.budget);
    std::vector<Address> raw;
    for (std::size_t i = 0; i < regions.size(); ++i) {
        auto part = generate_from_region(regions[i], quota[i], derive_seed(params.rng_seed, i));
        raw.insert(raw.end(), part.begin(), part.end());
    }
    CandidateSet cs = finalize(raw, seed, seed_label);
    cs.algorithm = "dense";
    cs.meta["budget"] = std::to_string(params.budget);
    cs.meta["rng_seed"] = std::to_string(params.rng_seed);
    cs.meta["leaf_max"] = std::to_string(params.leaf_max);
    cs.meta["regions"] = std::to_string(regions.size());
    cs.meta["raw_count"] = std::to_string(raw.size());
    detail::check_seed_disjoint(cs, seed);
    return cs;
}

/// Segment-wise frequency model over a seed set. Consecutive nibbles whose
/// entropies differ by at most `threshold` share a segment; each segment is
/// sampled independently from its observed value frequencies.
class EntropyModel {
public:
    struct Segment {
        int begin = 0;  // first nibble
        int end = 0;    // one past last nibble
        std::vector<Address> values;  // segment bits only, rest zero
        std::vector<std::uint64_t> cumulative;
    };

    EntropyModel(std::span<const Address> seed, double threshold) {
        if (seed.size() < 2) throw Error(Errc::SeedTooSmall, "entropy model needs at least 2 seed addresses");
        entropies_ = nibble_entropies(seed);
        int start = 0;
        for (int i = 0; i < Address::kNibbles; ++i) {
            if (i + 1 == Address::kNibbles || std::fabs(entropies_[i] - entropies_[i + 1]) > threshold) {
                segments_.push_back(build_segment(seed, start, i + 1));
                start = i + 1;
            }
        }
    }

    const std::vector<Segment>& segments() const { return segments_; }
    const std::array<double, Address::kNibbles>& entropies() const { return entropies_; }

    Address sample(Rng& rng) const {
        Address a;
        for (const auto& s : segments_) {
            const std::uint64_t x = rng.below(s.cumulative.back());
            const auto idx = std::upper_bound(s.cumulative.begin(), s.cumulative.end(), x) - s.cumulative.begin();
            const Address& v = s.values[static_cast<std::size_t>(idx)];
            a = Address(a.hi() | v.hi(), a.lo() | v.lo());
        }
        return a;
    }

private:
    static Address segment_bits(const Address& a, int begin, int end) {
        Address out;
        for (int i = begin; i < end; ++i) out = out.with_nibble(i, a.nibble(i));
        return out;
    }

    static Segment build_segment(std::span<const Address> seed, int begin, int end) {
        std::map<Address, std::uint64_t> freq;
        for (const Address& a : seed) ++freq[segment_bits(a, begin, end)];
        Segment s{begin, end, {}, {}};
        std::uint64_t acc = 0;
        for (const auto& [v, n] : freq) {
            s.values.push_back(v);
            acc += n;
            s.cumulative.push_back(acc);
        }
        return s;
    }

    std::array<double, Address::kNibbles> entropies_{};
    std::vector<Segment> segments_;
};

struct EntropyParams {
    std::uint64_t budget = 100'000;
    std::uint64_t rng_seed = 0;
    double segment_threshold = 0.1;
};

/// Entropy-segment generator (simplified: segments are sampled
/// independently, no dependency model between them). Draws until `budget`
/// distinct non-seed addresses exist or budget*100 draws were spent.
inline CandidateSet entropy_generate(std::span<const Address> seed, const EntropyParams& params,
                                     const std::string& seed_label = "seed") {
    const EntropyModel model(seed, params.segment_threshold);
    const std::unordered_set<Address> seeds(seed.begin(), seed.end());
    std::unordered_set<Address> produced;
    Rng rng(params.rng_seed);
    const std::uint64_t max_draws = params.budget * 100;
    for (std::uint64_t draw = 0; draw < max_draws && produced.size() < params.budget; ++draw) {
        const Address a = model.sample(rng);
        if (!seeds.contains(a)) produced.insert(a);
    }
    const std::vector<Address> raw(produced.begin(), produced.end());
    CandidateSet cs = finalize(raw, seed, seed_label);
    cs.algorithm = "entropy";
    cs.meta["budget"] = std::to_string(params.budget);
    cs.meta["rng_seed"] = std::to_string(params.rng_seed);
    cs.meta["segment_threshold"] = format_double(params.segment_threshold);
    cs.meta["segments"] = std::to_string(model.segments().size());
    cs.meta["raw_count"] = std::to_string(raw.size());
    cs.meta["model"] = "independent-segment-sampling (simplified, no bayesian network)";
    detail::check_seed_disjoint(cs, seed);
    return cs;
}

/// Baseline: uniform random addresses inside the given prefixes (prefix
/// chosen uniformly per draw).
inline std::vector<Address> uniform_in_prefixes(std::span<const Prefix> prefixes, std::uint64_t count,
                                                std::uint64_t rng_seed) {
    std::vector<Address> out;
    if (prefixes.empty()) return out;
    Rng rng(rng_seed);
    out.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const Prefix& p = prefixes[rng.below(prefixes.size())];
        const std::uint64_t hi = rng.next();
        const std::uint64_t lo = rng.next();
        const Address net_mask = Address(~0ULL, ~0ULL).masked(p.length());
        out.emplace_back(p.base().hi() | (hi & ~net_mask.hi()), p.base().lo() | (lo & ~net_mask.lo()));
    }
    return out;
}

inline void write_candidate_set(const std::string& path, const CandidateSet& cs) {
    write_address_list(path, cs.addresses);
    std::string meta;
    meta += "algorithm=" + cs.algorithm + "\n";
    meta += "seed_label=" + cs.seed_label + "\n";
    meta += "budget_used=" + std::to_string(cs.budget_used) + "\n";
    meta += "count=" + std::to_string(cs.addresses.size()) + "\n";
    for (const auto& [k, v] : cs.meta) meta += k + "=" + v + "\n";
    write_file(path + ".meta", meta);
}

} // namespace v6forge
