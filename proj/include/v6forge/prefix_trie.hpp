#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "v6forge/address.hpp"

namespace v6forge {

/// Binary (one bit per level) trie keyed by prefix. Lookup walks at most
/// 128 levels and remembers the deepest node carrying a value.
template <typename Value>
class PrefixTrie {
public:
    PrefixTrie() { nodes_.emplace_back(); }

    /// Inserts or, when the exact prefix already exists, replaces the stored
    /// value with `resolve(old, incoming)`.
    template <typename Resolve>
    void insert(const Prefix& p, Value v, Resolve&& resolve) {
        std::uint32_t cur = 0;
        for (int i = 0; i < p.length(); ++i) {
            const int b = p.base().bit(i) ? 1 : 0;
            if (nodes_[cur].child[b] == kNone) {
                nodes_[cur].child[b] = static_cast<std::uint32_t>(nodes_.size());
                nodes_.emplace_back();
            }
            cur = nodes_[cur].child[b];
        }
        auto& slot = nodes_[cur].value;
        if (slot) {
            slot = resolve(std::move(*slot), std::move(v));
        } else {
            slot = std::move(v);
            entries_.push_back({p, cur});
        }
    }

    void insert(const Prefix& p, Value v) {
        insert(p, std::move(v), [](Value, Value incoming) { return incoming; });
    }

    /// Value of the longest stored prefix containing `a`, with its length.
    std::optional<std::pair<Value, int>> longest_match(const Address& a) const {
        std::optional<std::pair<Value, int>> best;
        std::uint32_t cur = 0;
        int depth = 0;
        while (true) {
            if (nodes_[cur].value) best.emplace(*nodes_[cur].value, depth);
            if (depth == 128) break;
            const std::uint32_t next = nodes_[cur].child[a.bit(depth) ? 1 : 0];
            if (next == kNone) break;
            cur = next;
            ++depth;
        }
        return best;
    }

    /// True iff some stored prefix contains `a`; stops at the shortest hit.
    bool covers(const Address& a) const {
        std::uint32_t cur = 0;
        for (int depth = 0;; ++depth) {
            if (nodes_[cur].value) return true;
            if (depth == 128) return false;
            const std::uint32_t next = nodes_[cur].child[a.bit(depth) ? 1 : 0];
            if (next == kNone) return false;
            cur = next;
        }
    }

    const Value* find(const Prefix& p) const {
        std::uint32_t cur = 0;
        for (int i = 0; i < p.length(); ++i) {
            cur = nodes_[cur].child[p.base().bit(i) ? 1 : 0];
            if (cur == kNone) return nullptr;
        }
        return nodes_[cur].value ? &*nodes_[cur].value : nullptr;
    }

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    /// Stored (prefix, value) pairs in insertion order.
    std::vector<std::pair<Prefix, Value>> entries() const {
        std::vector<std::pair<Prefix, Value>> out;
        out.reserve(entries_.size());
        for (const auto& e : entries_) out.emplace_back(e.prefix, *nodes_[e.node].value);
        return out;
    }

private:
    static constexpr std::uint32_t kNone = 0xffffffffu;

    struct Node {
        std::uint32_t child[2] = {kNone, kNone};
        std::optional<Value> value;
    };
    struct Entry {
        Prefix prefix;
        std::uint32_t node;
    };

    std::vector<Node> nodes_;
    std::vector<Entry> entries_;
};

/// Set of prefixes with "is this address covered" queries.
class PrefixSet {
public:
    PrefixSet() = default;
    template <typename Range>
    explicit PrefixSet(const Range& prefixes) {
        for (const Prefix& p : prefixes) insert(p);
    }

    void insert(const Prefix& p) { trie_.insert(p, true); }
    bool covers(const Address& a) const { return trie_.covers(a); }
    std::size_t size() const { return trie_.size(); }
    bool empty() const { return trie_.empty(); }

private:
    PrefixTrie<bool> trie_;
};

} // namespace v6forge
