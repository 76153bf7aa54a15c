#pragma once

#include <cmath>
#include <cstdint>

namespace ragrasp {

/// Deterministic xoshiro256++ generator seeded through splitmix64.
///
/// We avoid std::uniform_*_distribution on purpose: its output is
/// implementation-defined, and every dataset, scene and sampler contract in
/// this library promises bit-identical results for a given seed. Substreams
/// (substream()) let callers fan out per-sample generators so parallel
/// generation keeps a deterministic output order.
class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t x = seed;
        for (auto& w : s_) w = splitmix64(x);
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be > 0.
    uint64_t uniform_index(uint64_t n) {
        // Multiply-shift rejection-free mapping is biased for huge n; all our
        // ranges are far below 2^32 so plain modulo of the high bits is fine.
        return (next_u64() >> 16) % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Independent generator derived from this seed and a stream index.
    static Rng substream(uint64_t seed, uint64_t stream) {
        uint64_t x = seed;
        uint64_t a = splitmix64(x);
        x = stream ^ 0x9e3779b97f4a7c15ull;
        uint64_t b = splitmix64(x);
        return Rng(a ^ rotl(b, 31));
    }

private:
    static uint64_t rotl(uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

    static uint64_t splitmix64(uint64_t& state) {
        state += 0x9e3779b97f4a7c15ull;
        uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    uint64_t s_[4];
};

}  // namespace ragrasp
