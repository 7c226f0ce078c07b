#pragma once

// Seed-stream derivation. Every randomized step draws from an engine seeded by
// hashing a path of integers (master seed, realization index, draw index, ...),
// so work units can run in any order or on any thread with identical results.

#include <cstdint>
#include <initializer_list>
#include <random>

namespace knnim {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    return mix64(mix64(seed) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                    std::initializer_list<std::uint64_t> path) noexcept {
    for (auto p : path) seed = derive_seed(seed, p);
    return seed;
}

inline Rng make_rng(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    return Rng(seq);
}

inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    return make_rng(derive_seed(seed, path));
}

}  // namespace knnim
