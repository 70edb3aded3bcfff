#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace textrobust {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// splitmix64-backed generator. <random> distributions are implementation
// defined, so every sampled value in the pipeline goes through this class
// to keep outputs identical across compilers and platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    // uniform in [0, bound), bound > 0; rejection sampling, no modulo bias
    std::uint64_t uniform(std::uint64_t bound) {
        if (bound == 0) throw std::invalid_argument("Rng::uniform: bound must be > 0");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % bound;
    }

    // uniform in [0, 1) with 53 bits of precision
    double uniform_real() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Box-Muller, one value per call
    double normal(double mean = 0.0, double stddev = 1.0) {
        double u1 = uniform_real();
        while (u1 <= 0.0) u1 = uniform_real();
        const double u2 = uniform_real();
        const double two_pi = 6.283185307179586;
        return mean + stddev * std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    bool coin() { return (next_u64() >> 63) != 0; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[uniform(i)]);
        }
    }

    // k distinct indices from [0, n), returned in ascending order
    std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k) {
        std::vector<std::size_t> all(n);
        for (std::size_t i = 0; i < n; ++i) all[i] = i;
        k = std::min(k, n);
        for (std::size_t i = 0; i < k; ++i) {
            std::swap(all[i], all[i + uniform(n - i)]);
        }
        all.resize(k);
        std::sort(all.begin(), all.end());
        return all;
    }

private:
    std::uint64_t state_;
};

}  // namespace textrobust
