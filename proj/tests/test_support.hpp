#pragma once

#include <arpa/inet.h>
#include <unistd.h>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "v6forge/address.hpp"
#include "v6forge/rng.hpp"

namespace v6forge::testing {

/// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("v6forge_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline Address random_address(Rng& rng) { return Address(rng.next(), rng.next()); }

/// 16 raw bytes via the C library, independent of the library's parser.
inline std::array<std::uint8_t, 16> libc_bytes(const std::string& text) {
    std::array<std::uint8_t, 16> b{};
    if (inet_pton(AF_INET6, text.c_str(), b.data()) != 1) throw std::runtime_error("inet_pton failed: " + text);
    return b;
}

inline std::string libc_format(const std::array<std::uint8_t, 16>& b) {
    char buf[INET6_ADDRSTRLEN];
    inet_ntop(AF_INET6, b.data(), buf, sizeof buf);
    return buf;
}

inline std::array<std::uint8_t, 16> to_bytes(const Address& a) {
    std::array<std::uint8_t, 16> b{};
    for (int i = 0; i < 8; ++i) {
        b[i] = static_cast<std::uint8_t>(a.hi() >> (56 - 8 * i));
        b[8 + i] = static_cast<std::uint8_t>(a.lo() >> (56 - 8 * i));
    }
    return b;
}

/// Per-bit prefix membership over raw bytes.
inline bool naive_contains(const std::array<std::uint8_t, 16>& base, int length, const std::array<std::uint8_t, 16>& a) {
    for (int i = 0; i < length; ++i) {
        const int byte = i / 8, bit = 7 - i % 8;
        if (((base[byte] >> bit) & 1) != ((a[byte] >> bit) & 1)) return false;
    }
    return true;
}

/// Longest match by scanning every entry.
template <typename Entries>
std::optional<std::uint32_t> brute_force_lpm(const Entries& entries, const Address& a) {
    int best_len = -1;
    std::optional<std::uint32_t> best;
    const auto ab = to_bytes(a);
    for (const auto& [p, asn] : entries) {
        if (p.length() > best_len && naive_contains(to_bytes(p.base()), p.length(), ab)) {
            best_len = p.length();
            best = asn;
        }
    }
    return best;
}

} // namespace v6forge::testing
