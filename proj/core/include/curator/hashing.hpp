#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace curator {

// 64-bit FNV-1a. Stable across platforms; used for shingles, feature
// hashing, and config digests. Not cryptographic.
constexpr std::uint64_t fnv1a64(std::string_view data,
                                std::uint64_t seed = 0xcbf29ce484222325ULL) {
    std::uint64_t h = seed;
    for (const char c : data) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Finalizer from the splitmix64 generator; good avalanche for cheap
// integer key mixing.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

// Sub-seed derivation: one global seed, independent per-stage streams.
inline std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view label) {
    return mix64(global_seed ^ fnv1a64(label));
}

}  // namespace curator
