#pragma once

#include <cstdint>
#include <string_view>

namespace ckg {

// Stable across platforms and runs; used for seed derivation and config hashes.

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

constexpr std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t v) {
    return splitmix64(seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2)));
}

constexpr std::uint64_t hash_combine(std::uint64_t seed, std::string_view s) {
    // length prefix keeps ("ab","c") distinct from ("a","bc")
    return hash_combine(hash_combine(seed, static_cast<std::uint64_t>(s.size())), fnv1a(s));
}

} // namespace ckg
