#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace camoseg::nn {

// Deterministic RNG used everywhere. splitmix64 core so the stream is pinned
// independent of the standard library implementation; Box-Muller normals.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0,1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // Unbiased integer in [0,n).
    int uniform_int(int n) {
        return static_cast<int>((static_cast<__uint128_t>(next_u64()) * static_cast<uint64_t>(n)) >> 64);
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double std) { return mean + std * normal(); }

    template <typename T>
    void shuffle(std::vector<T>& xs) {
        for (int i = static_cast<int>(xs.size()) - 1; i > 0; --i) {
            const int j = uniform_int(i + 1);
            std::swap(xs[static_cast<size_t>(i)], xs[static_cast<size_t>(j)]);
        }
    }

    // Derives an independent stream; used for seed-splitting across images,
    // iterations, and query slots.
    static uint64_t derive(uint64_t seed, uint64_t stream) {
        uint64_t z = seed ^ (0x9e3779b97f4a7c15ull + (stream << 1));
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

private:
    uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace camoseg::nn
