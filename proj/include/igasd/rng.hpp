#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace igasd {

/// SplitMix64 finalizer. All derived seeds in this project flow through this
/// mixer so that the exact stream layout can be reproduced from the docs.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Purpose tags for per-trial seed derivation. Values are part of the
/// documented stream layout; do not renumber.
enum class SeedPurpose : std::uint64_t {
    Channel = 1,
    Bits = 2,
    Noise = 3,
};

/// seed = mix(mix(mix(mix(master) ^ snr_index) ^ trial_index) ^ purpose)
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t snr_index,
                                 std::uint64_t trial_index, SeedPurpose purpose) {
    std::uint64_t h = mix64(master);
    h = mix64(h ^ snr_index);
    h = mix64(h ^ trial_index);
    return mix64(h ^ static_cast<std::uint64_t>(purpose));
}

/// Deterministic random source: mt19937_64 (bit-exact per the standard) plus
/// an explicit Box-Muller transform, so streams are reproducible across
/// standard libraries. std::normal_distribution is implementation-defined
/// and would break that.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_int(std::uint64_t n) {
        // Rejection-free modulo is biased for huge n; all uses here have
        // n << 2^32 where the bias is far below statistical noise.
        return engine_() % n;
    }

    /// Standard normal via Box-Muller; second value of each pair is cached.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // u1 in (0,1] so the log is finite.
        const double u1 = static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace igasd
