#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

namespace diffcore {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Deterministic random stream. mt19937_64 raw output is pinned by the
// standard; the value mappings below are ours, so sequences are
// reproducible across platforms (std::*_distribution is not).
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : seed_(seed), eng_(splitmix64(seed)) {}

    std::uint64_t seed() const { return seed_; }

    // Independent stream derived from the base seed, not the current state.
    Rng fork(std::uint64_t stream) const {
        return Rng(splitmix64(seed_ ^ (0xD1B54A32D192ED03ULL + stream * 0x9E3779B97F4A7C15ULL)));
    }

    std::uint64_t next_u64() { return eng_(); }

    // [0, 1)
    double uniform() { return double(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double gaussian() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u1 = std::max(uniform(), 0x1.0p-53);
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double th = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(th);
        has_cached_ = true;
        return r * std::cos(th);
    }

    // Standard Gumbel(0,1) via -log(-log(u)), u clamped away from {0,1}
    // so the double log never produces an infinity.
    double gumbel() {
        double u = std::clamp(uniform(), 1e-12, 1.0 - 1e-12);
        return -std::log(-std::log(u));
    }

    // Unbiased integer in [0, n), rejection sampled.
    int bounded(int n) {
        std::uint64_t un = std::uint64_t(n);
        std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
        std::uint64_t r;
        do {
            r = eng_();
        } while (r >= limit);
        return int(r % un);
    }

  private:
    std::uint64_t seed_;
    std::mt19937_64 eng_;
    bool has_cached_ = false;
    double cached_ = 0.0;
};

}  // namespace diffcore
