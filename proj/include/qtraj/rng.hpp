#pragma once

#include <cstdint>
#include <cmath>

namespace qtraj {

// xoshiro256++ with splitmix64 seeding. Substream k of master seed s is
// seeded from splitmix64 initialized at s ^ (k+1)*0x9E3779B97F4A7C15, so
// trajectories own independent generators derived only from (seed, index).
class Rng {
public:
    Rng(uint64_t seed, uint64_t stream = 0) {
        uint64_t x = seed ^ ((stream + 1) * 0x9E3779B97F4A7C15ULL);
        for (int i = 0; i < 4; ++i) s_[i] = splitmix64(x);
        have_cached_ = false;
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

    // uniform in (0,1)
    double next_double() {
        for (;;) {
            double u = double(next_u64() >> 11) * 0x1.0p-53;
            if (u > 0.0) return u;
        }
    }

    // standard normal, Box-Muller with one cached value
    double next_gaussian() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = next_double();
        double u2 = next_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    static uint64_t splitmix64(uint64_t& x) {
        uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    uint64_t s_[4];
    double cached_ = 0.0;
    bool have_cached_;
};

}  // namespace qtraj
