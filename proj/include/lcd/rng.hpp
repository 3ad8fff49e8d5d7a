#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace lcd {

// splitmix64 step; used to mix seeds and derive independent streams.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    return splitmix64(seed ^ splitmix64(salt));
}

// Deterministic generator (xoshiro256**). We roll our own uniform/normal
// draws instead of <random> distributions so that streams are identical
// across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& w : state_) {
            x = splitmix64(x);
            w = x;
        }
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n), unbiased. n must be > 0.
    std::uint64_t uniform_int(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % n;
    }

    // Standard normal via Box-Muller.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    // k distinct indices drawn uniformly from [0, n), in draw order.
    std::vector<std::size_t> sample_without_replacement(std::size_t k, std::size_t n) {
        std::vector<std::size_t> pool(n);
        for (std::size_t i = 0; i < n; ++i) pool[i] = i;
        std::vector<std::size_t> out;
        out.reserve(k);
        for (std::size_t i = 0; i < k && i < n; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(uniform_int(n - i));
            std::swap(pool[i], pool[j]);
            out.push_back(pool[i]);
        }
        return out;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4];
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace lcd
