#pragma once

#include <cstdint>
#include <random>

#include "curator/hashing.hpp"

namespace curator {

// Deterministic RNG used everywhere randomness is needed. mt19937_64 is
// fully specified by the standard, and the helpers below avoid
// std::uniform_*_distribution, whose output is implementation-defined.
// Identical seeds therefore produce identical streams on any platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, n). Rejection sampling keeps the result unbiased.
    std::uint64_t next_below(std::uint64_t n) {
        if (n == 0) return 0;
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return x % n;
    }

    // Uniform in [0, 1) with 53 bits of precision.
    double next_real() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 engine_;
};

// Per-document generator: transforms stay order-independent and
// parallelizable because each document owns its stream.
inline Rng doc_rng(std::uint64_t seed, std::string_view doc_id) {
    return Rng(mix64(seed ^ fnv1a64(doc_id)));
}

}  // namespace curator
