#pragma once

#include <array>
#include <bit>
#include <charconv>
#include <compare>
#include <cstdint>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "v6forge/error.hpp"

namespace v6forge {

/// A 128-bit IPv6 address viewed as 32 nibbles, most-significant first.
/// Nibble indices are 0-based (0..31); anything printed for humans in
/// "position" terms uses 1-based indices via `nibble_label`.
class Address {
public:
    static constexpr int kNibbles = 32;

    constexpr Address() = default;
    constexpr Address(std::uint64_t hi, std::uint64_t lo) : hi_(hi), lo_(lo) {}

    static Address from_nibbles(std::span<const std::uint8_t> nibbles) {
        if (nibbles.size() != kNibbles)
            throw Error(Errc::MalformedAddress, "expected 32 nibbles");
        Address a;
        for (int i = 0; i < kNibbles; ++i) {
            if (nibbles[i] > 15) throw Error(Errc::MalformedAddress, "nibble out of range");
            a = a.with_nibble(i, nibbles[i]);
        }
        return a;
    }

    constexpr std::uint64_t hi() const { return hi_; }
    constexpr std::uint64_t lo() const { return lo_; }

    constexpr std::uint8_t nibble(int i) const {
        const std::uint64_t word = i < 16 ? hi_ : lo_;
        const int shift = 60 - 4 * (i % 16);
        return static_cast<std::uint8_t>((word >> shift) & 0xf);
    }

    constexpr Address with_nibble(int i, std::uint8_t v) const {
        const int shift = 60 - 4 * (i % 16);
        const std::uint64_t mask = std::uint64_t{0xf} << shift;
        const std::uint64_t bits = (std::uint64_t{v} & 0xf) << shift;
        Address out = *this;
        if (i < 16)
            out.hi_ = (hi_ & ~mask) | bits;
        else
            out.lo_ = (lo_ & ~mask) | bits;
        return out;
    }

    /// Bit `i` counted from the most significant bit (0..127).
    constexpr bool bit(int i) const {
        return i < 64 ? ((hi_ >> (63 - i)) & 1) != 0 : ((lo_ >> (127 - i)) & 1) != 0;
    }

    constexpr std::uint16_t group(int g) const {
        const std::uint64_t word = g < 4 ? hi_ : lo_;
        return static_cast<std::uint16_t>(word >> (48 - 16 * (g % 4)));
    }

    std::array<std::uint8_t, kNibbles> nibbles() const {
        std::array<std::uint8_t, kNibbles> out{};
        for (int i = 0; i < kNibbles; ++i) out[i] = nibble(i);
        return out;
    }

    /// Keeps the first `length` bits and zeroes the rest.
    constexpr Address masked(int length) const {
        if (length <= 0) return {};
        if (length >= 128) return *this;
        if (length <= 64) {
            const std::uint64_t m = length == 64 ? ~std::uint64_t{0} : ~(~std::uint64_t{0} >> length);
            return {hi_ & m, 0};
        }
        return {hi_, lo_ & ~(~std::uint64_t{0} >> (length - 64))};
    }

    constexpr auto operator<=>(const Address&) const = default;

private:
    std::uint64_t hi_ = 0;
    std::uint64_t lo_ = 0;
};

inline int nibble_label(int zero_based) { return zero_based + 1; }

namespace detail {

inline int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

inline bool parse_groups(std::string_view text, std::vector<std::uint16_t>& out) {
    if (text.empty()) return true;
    std::size_t pos = 0;
    while (true) {
        const std::size_t colon = text.find(':', pos);
        const std::string_view tok = text.substr(pos, colon == std::string_view::npos ? text.npos : colon - pos);
        if (tok.empty() || tok.size() > 4) return false;
        std::uint16_t v = 0;
        for (char c : tok) {
            const int h = hex_value(c);
            if (h < 0) return false;
            v = static_cast<std::uint16_t>(v * 16 + h);
        }
        out.push_back(v);
        if (colon == std::string_view::npos) return true;
        pos = colon + 1;
    }
}

} // namespace detail

/// Parses full, compressed or mixed-case IPv6 text. Dotted IPv4 tails and
/// zone identifiers are rejected.
inline Address parse_address(std::string_view text) {
    auto fail = [&](const char* why) {
        return Error(Errc::MalformedAddress, std::string(why) + " in '" + std::string(text) + "'");
    };
    if (text.empty()) throw fail("empty address");
    if (text.find('.') != std::string_view::npos) throw fail("IPv4 notation not accepted");
    if (text.find('%') != std::string_view::npos) throw fail("zone identifier not accepted");

    std::vector<std::uint16_t> head;
    std::vector<std::uint16_t> tail;
    const std::size_t dbl = text.find("::");
    if (dbl != std::string_view::npos) {
        if (text.find("::", dbl + 1) != std::string_view::npos) throw fail("multiple '::'");
        if (!detail::parse_groups(text.substr(0, dbl), head) ||
            !detail::parse_groups(text.substr(dbl + 2), tail))
            throw fail("bad group");
        if (head.size() + tail.size() > 7) throw fail("too many groups");
    } else {
        if (!detail::parse_groups(text, head) || head.size() != 8) throw fail("expected 8 groups");
    }

    std::array<std::uint16_t, 8> groups{};
    for (std::size_t i = 0; i < head.size(); ++i) groups[i] = head[i];
    for (std::size_t i = 0; i < tail.size(); ++i) groups[8 - tail.size() + i] = tail[i];

    std::uint64_t hi = 0, lo = 0;
    for (int g = 0; g < 4; ++g) hi = (hi << 16) | groups[g];
    for (int g = 4; g < 8; ++g) lo = (lo << 16) | groups[g];
    return {hi, lo};
}

inline std::optional<Address> try_parse_address(std::string_view text) {
    try {
        return parse_address(text);
    } catch (const Error&) {
        return std::nullopt;
    }
}

/// RFC 5952 canonical text: lowercase, no leading zeros, the longest run
/// (>= 2 groups) of zero groups compressed, leftmost run on ties.
inline std::string format_address(const Address& a) {
    int best_start = -1, best_len = 0;
    for (int g = 0; g < 8;) {
        if (a.group(g) != 0) {
            ++g;
            continue;
        }
        int end = g;
        while (end < 8 && a.group(end) == 0) ++end;
        if (end - g > best_len) {
            best_start = g;
            best_len = end - g;
        }
        g = end;
    }
    if (best_len < 2) best_start = -1;

    std::string out;
    out.reserve(39);
    char buf[8];
    for (int g = 0; g < 8; ++g) {
        if (g == best_start) {
            out += "::";
            g += best_len - 1;
            continue;
        }
        if (!out.empty() && out.back() != ':') out += ':';
        auto res = std::to_chars(buf, buf + sizeof buf, a.group(g), 16);
        out.append(buf, res.ptr);
    }
    return out;
}

enum class Protocol : std::uint8_t { ICMP = 0, TCP80 = 1, TCP443 = 2, UDP53 = 3, UDP443 = 4 };

inline constexpr std::array<Protocol, 5> kAllProtocols{Protocol::ICMP, Protocol::TCP80, Protocol::TCP443,
                                                       Protocol::UDP53, Protocol::UDP443};

inline std::string_view to_string(Protocol p) {
    switch (p) {
    case Protocol::ICMP: return "ICMP";
    case Protocol::TCP80: return "TCP80";
    case Protocol::TCP443: return "TCP443";
    case Protocol::UDP53: return "UDP53";
    case Protocol::UDP443: return "UDP443";
    }
    return "?";
}

inline std::optional<Protocol> parse_protocol(std::string_view s) {
    for (Protocol p : kAllProtocols)
        if (s == to_string(p)) return p;
    // zmap-ish spellings
    if (s == "icmp" || s == "icmp6" || s == "icmp_echo") return Protocol::ICMP;
    if (s == "tcp80" || s == "tcp/80") return Protocol::TCP80;
    if (s == "tcp443" || s == "tcp/443") return Protocol::TCP443;
    if (s == "udp53" || s == "udp/53") return Protocol::UDP53;
    if (s == "udp443" || s == "udp/443") return Protocol::UDP443;
    return std::nullopt;
}

/// Small value set of protocols, one bit per protocol.
class ProtocolSet {
public:
    constexpr ProtocolSet() = default;
    constexpr ProtocolSet(std::initializer_list<Protocol> ps) {
        for (Protocol p : ps) insert(p);
    }
    static constexpr ProtocolSet all() { return from_bits(0x1f); }
    static constexpr ProtocolSet from_bits(std::uint8_t b) {
        ProtocolSet s;
        s.bits_ = b & 0x1f;
        return s;
    }

    constexpr void insert(Protocol p) { bits_ |= bit(p); }
    constexpr void erase(Protocol p) { bits_ &= static_cast<std::uint8_t>(~bit(p)); }
    constexpr bool contains(Protocol p) const { return (bits_ & bit(p)) != 0; }
    constexpr bool empty() const { return bits_ == 0; }
    constexpr int size() const { return std::popcount(bits_); }
    constexpr std::uint8_t bits() const { return bits_; }
    constexpr ProtocolSet operator&(ProtocolSet o) const { return from_bits(bits_ & o.bits_); }
    constexpr ProtocolSet operator|(ProtocolSet o) const { return from_bits(bits_ | o.bits_); }
    constexpr bool operator==(const ProtocolSet&) const = default;

private:
    static constexpr std::uint8_t bit(Protocol p) { return static_cast<std::uint8_t>(1u << static_cast<int>(p)); }
    std::uint8_t bits_ = 0;
};

/// Address prefix, stored normalized (host bits zero).
class Prefix {
public:
    constexpr Prefix() = default;
    Prefix(const Address& base, int length) {
        if (length < 0 || length > 128) throw Error(Errc::MalformedPrefix, "length out of range");
        length_ = length;
        base_ = base.masked(length);
    }

    constexpr const Address& base() const { return base_; }
    constexpr int length() const { return length_; }

    constexpr bool contains(const Address& a) const { return a.masked(length_) == base_; }
    constexpr bool contains(const Prefix& p) const { return p.length_ >= length_ && contains(p.base_); }

    constexpr auto operator<=>(const Prefix&) const = default;

private:
    Address base_;
    int length_ = 0;
};

inline bool prefix_contains(const Prefix& p, const Address& a) { return p.contains(a); }

/// Accepts "addr/len"; a bare address is read as /128.
inline Prefix parse_prefix(std::string_view text) {
    const std::size_t slash = text.find('/');
    if (slash == std::string_view::npos) return Prefix(parse_address(text), 128);
    int len = -1;
    const std::string_view lt = text.substr(slash + 1);
    auto [ptr, ec] = std::from_chars(lt.data(), lt.data() + lt.size(), len);
    if (ec != std::errc{} || ptr != lt.data() + lt.size() || lt.empty() || len < 0 || len > 128)
        throw Error(Errc::MalformedPrefix, "bad prefix length in '" + std::string(text) + "'");
    return Prefix(parse_address(text.substr(0, slash)), len);
}

inline std::string format_prefix(const Prefix& p) {
    return format_address(p.base()) + "/" + std::to_string(p.length());
}

using AddressList = std::vector<Address>;

/// Reads an address-list file: one address per line. Blank lines are
/// tolerated on input; anything else malformed throws.
inline AddressList read_address_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::IoError, "cannot open " + path);
    AddressList out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        try {
            out.push_back(parse_address(line));
        } catch (const Error& e) {
            throw Error(Errc::MalformedAddress, path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

inline void write_address_list(const std::string& path, std::span<const Address> addrs) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoError, "cannot write " + path);
    for (const Address& a : addrs) out << format_address(a) << '\n';
    if (!out) throw Error(Errc::IoError, "write failed for " + path);
}

} // namespace v6forge

template <>
struct std::hash<v6forge::Address> {
    std::size_t operator()(const v6forge::Address& a) const noexcept {
        std::uint64_t x = a.hi() * 0x9e3779b97f4a7c15ULL ^ (a.lo() + 0x7f4a7c159e3779b9ULL + (a.hi() << 6));
        x ^= x >> 33;
        x *= 0xff51afd7ed558ccdULL;
        x ^= x >> 33;
        return static_cast<std::size_t>(x);
    }
};

template <>
struct std::hash<v6forge::Prefix> {
    std::size_t operator()(const v6forge::Prefix& p) const noexcept {
        return std::hash<v6forge::Address>{}(p.base()) ^ (static_cast<std::size_t>(p.length()) * 0x9e3779b97f4a7c15ULL);
    }
};
