#pragma once

#include <cstdint>
#include <random>

namespace valdyn {

/// SplitMix64 step. Used for seed mixing so that derived seeds decorrelate
/// even when the inputs are small consecutive integers.
inline std::uint64_t split_mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Stated mixing function for derived seeds: two SplitMix64 rounds folding in
/// the stream indices. mix_seed(base, i, j) != mix_seed(base, j, i) in general,
/// and changing one index never touches streams derived from the others.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
    return split_mix64(split_mix64(base ^ split_mix64(a)) ^ split_mix64(~b));
}

/// Seeded generator with explicit, portable real-number mapping. All draws are
/// produced from mt19937_64 bits directly (no std::*_distribution), so a seed
/// yields the same stream on every platform and standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform on [-radius, +radius].
    double symmetric(double radius) { return radius * (2.0 * uniform01() - 1.0); }

    /// Uniform strictly inside (-1, 1); the endpoint -1 is rejected.
    double open_symmetric_unit() {
        for (;;) {
            double u = uniform01();
            if (u != 0.0) return 2.0 * u - 1.0;
        }
    }

    /// Uniform integer in [0, n).
    int uniform_int(int n) {
        return static_cast<int>(engine_() % static_cast<std::uint64_t>(n));
    }

private:
    std::mt19937_64 engine_;
};

} // namespace valdyn
