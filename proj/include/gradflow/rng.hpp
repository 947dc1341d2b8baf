#pragma once

// Counter-based Gaussian draws: every increment is a pure function of
// (seed, path, step, mode), so paths are reproducible in isolation, workers
// need no coordination, and refinement arms can share a Brownian path by
// summing fine-step draws.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace gradflow {

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                                  std::uint64_t c, std::uint64_t d) {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ a);
    h = mix64(h ^ b);
    h = mix64(h ^ c);
    h = mix64(h ^ d);
    return h;
}

inline double uniform01(std::uint64_t h) {
    // (0,1), never exactly 0 or 1
    return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace detail

/// N(0,1) draw addressed by counters.
inline double standard_normal(std::uint64_t seed, std::uint64_t path, std::uint64_t step,
                              std::uint64_t mode) {
    const double u1 = detail::uniform01(detail::counter_hash(seed, path, step, mode, 0));
    const double u2 = detail::uniform01(detail::counter_hash(seed, path, step, mode, 1));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// One Brownian path's noise source. `substeps > 1` refines the time grid:
/// the draw at (step, mode) becomes the normalized sum of `substeps` fine
/// draws, so a run at dt and one at dt/2 (with doubled substeps) share the
/// same underlying path.
struct WienerStream {
    std::uint64_t seed = 0;
    std::uint64_t path = 0;
    int substeps = 1;

    double gauss(std::uint64_t step, std::uint64_t mode) const {
        if (substeps == 1) return standard_normal(seed, path, step, mode);
        double s = 0.0;
        for (int i = 0; i < substeps; ++i)
            s += standard_normal(seed, path, step * substeps + i, mode);
        return s / std::sqrt(static_cast<double>(substeps));
    }

    /// Uniform(0,1) helper for test-field sampling.
    double uniform(std::uint64_t step, std::uint64_t mode) const {
        return detail::uniform01(detail::counter_hash(seed, path, step, mode, 2));
    }
};

}  // namespace gradflow
