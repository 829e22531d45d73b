#pragma once

#include <cmath>
#include <cstdint>

namespace jtr {

// Deterministic pseudo-random generator (splitmix64). The standard library
// distributions are not required to produce identical streams across
// implementations, so the few distributions we need are written out here.
// Results depend only on the seed and the call sequence.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform integer in [0, bound); rejection keeps it exactly uniform
    uint64_t next_below(uint64_t bound) {
        uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    // uniform in [0, 1) with 53 random bits
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // standard normal, Marsaglia polar method
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * next_double() - 1.0;
            v = 2.0 * next_double() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
    }

    // derive an independent child stream; advances this stream once
    Rng split() { return Rng(next_u64()); }

private:
    uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace jtr
