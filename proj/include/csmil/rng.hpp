#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace csmil {

// Self-contained splitmix64 generator. std:: distributions are not used anywhere
// in the pipeline so that identical seeds give identical artifacts on any libstdc++.
class Rng {
  public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller (two draws per sample, no cached spare).
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Uniform integer in [0, n) via multiply-shift.
    uint64_t index(uint64_t n) {
        return uint64_t((__uint128_t(next_u64()) * n) >> 64);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = size_t(index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    uint64_t state_;
};

// Stable seed derivation for sub-streams (per region, per epoch, ...).
inline uint64_t derive_seed(uint64_t base, uint64_t a, uint64_t b = 0) {
    Rng r(base ^ (a * 0xA24BAED4963EE407ULL) ^ (b * 0x9FB21C651E98DF25ULL));
    return r.next_u64();
}

} // namespace csmil
