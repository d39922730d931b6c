#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "antiphish/common.hpp"

namespace antiphish {

// All randomness flows through this wrapper. std::mt19937_64 is fully
// specified by the standard; the distributions are not, so we roll our own.
// Same (seed, call sequence) therefore gives the same stream on every
// platform and standard library.
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t next_u64() { return eng_(); }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // uniform in [lo, hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n), n > 0; rejection sampling keeps it unbiased
    uint64_t below(uint64_t n) {
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do { x = eng_(); } while (x >= limit);
        return x % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    // standard normal via Box-Muller (deterministic, no cached spare)
    double normal() {
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 eng_;
};

inline uint64_t mix64(uint64_t a, uint64_t b) {
    // splitmix64 finalizer over the combination
    uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Child seeds are derived from (master seed, stage name) so every stage is
// independently reproducible.
inline uint64_t derive_seed(uint64_t master, std::string_view stage) {
    return mix64(master, fnv1a64(stage));
}

}  // namespace antiphish
