#pragma once

#include <cstdint>
#include <random>

namespace ghostmap {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used to derive independent stream seeds from a
/// master seed and a counter, so trial i's seed does not depend on how many
/// trials ran before it.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return mix64(mix64(master) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

/// Uniform double in (0, 1].
inline double uniform_open_closed(Rng& rng) {
    // 53 random bits -> [0, 1), then flip to (0, 1]
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return 1.0 - u;
}

/// Uniform integer in [0, n). n must be > 0.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(rng);
}

}  // namespace ghostmap
