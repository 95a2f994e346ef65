#pragma once

#include <cstdint>

namespace sfrn {

// splitmix64 stream. The exact sequence is part of the reproducibility
// contract (seeds must replay identically everywhere), so the constants and
// draw rules below are documented in the README and must not change.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform double in [0,1), 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [lo, hi] inclusive: lo + next_u64() mod span.
    uint64_t next_range(uint64_t lo, uint64_t hi) {
        return lo + next_u64() % (hi - lo + 1);
    }

    // Uniform in [-bound, bound).
    double next_symmetric(double bound) { return bound * (2.0 * next_double() - 1.0); }

private:
    uint64_t state_;
};

}  // namespace sfrn
