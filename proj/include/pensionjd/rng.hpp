#pragma once

// Deterministic random streams for the simulator. Each path derives its own
// xoshiro256++ stream from (seed, path index) through splitmix64, so results
// do not depend on how paths are scheduled across threads.

#include <cmath>
#include <cstdint>

namespace pensionjd {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

class RngStream {
public:
    explicit RngStream(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    static RngStream for_path(std::uint64_t seed, std::uint64_t path_index) {
        std::uint64_t sm = path_index;
        const std::uint64_t mixed = splitmix64(sm);
        return RngStream(seed ^ mixed);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform in (0, 1]
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    // standard normal via Box-Muller; pairs are cached
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return r * std::cos(a);
    }

    // Poisson count by inversion; exp_neg_mean = e^{-mean} may be precomputed
    int poisson(double mean, double exp_neg_mean) {
        const double u = uniform();
        double p = exp_neg_mean;
        double cdf = p;
        int k = 0;
        // cap beyond which the remaining tail mass is negligible
        const int cap = static_cast<int>(mean + 12.0 * std::sqrt(mean + 1.0) + 50.0);
        while (u > cdf && k < cap) {
            ++k;
            p *= mean / k;
            cdf += p;
        }
        return k;
    }

    int poisson(double mean) { return poisson(mean, std::exp(-mean)); }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t s_[4] = {};
    double cached_ = 0.0;
    bool has_cached_ = false;
};

} // namespace pensionjd
