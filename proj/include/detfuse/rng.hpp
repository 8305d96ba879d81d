#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace detfuse::rng {

/// Counter-based generator: one 64-bit word per (seed, counter) pair, so
/// every stochastic stage is reproducible across platforms and languages.
inline std::uint64_t splitmix64(std::uint64_t seed, std::uint64_t counter) {
    std::uint64_t z = seed + counter * 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline double to_unit(std::uint64_t word) {
    return static_cast<double>(word >> 11) * 0x1.0p-53;  // [0, 1)
}

inline double uniform(std::uint64_t seed, std::uint64_t index) {
    return to_unit(splitmix64(seed, index));
}

/// Standard normal via Box-Muller from two counter-based uniforms.
inline double normal(std::uint64_t seed, std::uint64_t index) {
    const double u1 = to_unit(splitmix64(seed, 2 * index)) + 0x1.0p-54;  // keep > 0
    const double u2 = to_unit(splitmix64(seed, 2 * index + 1));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Stream derivation for independent substreams (per augmentation, per box).
inline std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ 0xA02BDBF7BB3C0A7Aull, stream);
}

}  // namespace detfuse::rng
