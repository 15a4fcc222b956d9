#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace cpnest {

/// SplitMix64 finalizer. Used both as the stream-derivation mixer and to
/// expand a single 64-bit seed into generator state.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Derives an independent stream seed from (base, a, b). The scheme is fixed:
/// each index is folded in through one SplitMix64 step, so (class, instance)
/// pairs map to well-separated seeds on every platform.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = base;
    std::uint64_t z = splitmix64(s);
    s = z ^ a;
    z = splitmix64(s);
    s = z ^ b;
    return splitmix64(s);
}

/// xoshiro256++ generator (Blackman & Vigna). Chosen because it is a named,
/// portable algorithm with exact 64-bit semantics; all stochastic output of
/// the library flows through this type so results are reproducible bit for
/// bit from a seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        // Standard initialization: expand the seed with SplitMix64.
        std::uint64_t s = seed;
        for (auto& word : state_) word = splitmix64(s);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1), 53 significant bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller on two uniforms; the second draw of
    /// each pair is cached so consumption is deterministic (two u64 per pair).
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double radius = std::sqrt(-2.0 * std::log1p(-u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        cached_ = radius * std::sin(angle);
        have_cached_ = true;
        return radius * std::cos(angle);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4];
    bool have_cached_ = false;
    double cached_ = 0.0;
};

}  // namespace cpnest
