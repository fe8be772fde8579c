#pragma once

#include <cmath>
#include <cstdint>

namespace parcelqc::rng {

// All randomness in the library flows through the generators below so that
// seeded runs reproduce bit-for-bit across platforms and compilers.
// std::mt19937_64 itself is pinned by the standard, but the distributions on
// top of it are not; these are fixed algorithms with fixed output.
//
// Stream discipline: each consumer derives its own stream with
// derive_stream(user_seed, purpose). Per-voxel draws go through normal_at /
// bits_at keyed on the voxel's flat index, which makes them order-independent
// and safe to evaluate in parallel.

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

enum StreamPurpose : std::uint64_t {
    kStreamParcelSeeds = 0x01,
    kStreamVoxelNoise = 0x02,
    kStreamLesionCenters = 0x03,
    kStreamSplit = 0x04,
};

inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t purpose) {
    std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL * (purpose + 1));
    splitmix64_next(s);
    return splitmix64_next(s);
}

/// Counter-keyed raw bits: independent of evaluation order.
inline std::uint64_t bits_at(std::uint64_t stream, std::uint64_t counter) {
    std::uint64_t s = stream ^ (counter * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
    return splitmix64_next(s);
}

inline double uniform_open01_from(std::uint64_t bits) {
    // (0,1): 53 random bits plus a half-ulp offset, never exactly 0 or 1.
    return static_cast<double>(bits >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

/// Standard normal draw keyed on (stream, counter) via Box-Muller.
inline double normal_at(std::uint64_t stream, std::uint64_t counter) {
    std::uint64_t s = stream ^ (counter * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
    const std::uint64_t a = splitmix64_next(s);
    const std::uint64_t b = splitmix64_next(s);
    const double u1 = uniform_open01_from(a);
    const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

/// xoshiro256++ 1.0 (Blackman & Vigna), state filled from splitmix64.
class Xoshiro256pp {
public:
    Xoshiro256pp(std::uint64_t seed, std::uint64_t purpose) {
        std::uint64_t s = derive_stream(seed, purpose);
        for (auto& word : state_) word = splitmix64_next(s);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform in [0, n) without modulo bias (Lemire's method).
    std::uint64_t below(std::uint64_t n) {
        std::uint64_t x = next();
        __uint128_t m = static_cast<__uint128_t>(x) * n;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            const std::uint64_t t = (0 - n) % n;
            while (lo < t) {
                x = next();
                m = static_cast<__uint128_t>(x) * n;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_open01_from(next());
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925287 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4]{};
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace parcelqc::rng
