#pragma once

#include <cstdint>

namespace engagemax {

// splitmix64, used to expand a user seed into generator state and to derive
// independent per-path seeds as mix(seed, path_index).
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
};

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    SplitMix64 sm(base ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
    return sm.next();
}

// xoshiro256++: the fixed, platform-independent generator behind every
// sampled quantity in this project. Identical seeds give identical streams.
class Xoshiro256pp {
public:
    explicit Xoshiro256pp(std::uint64_t seed) {
        SplitMix64 sm(seed);
        for (auto& w : s_) w = sm.next();
    }

    std::uint64_t next() {
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

    // Uniform on (0, 1]: 53-bit mantissa, never zero, so -ln(u) is finite.
    double uniform01() {
        const std::uint64_t bits = next() >> 11;
        return (static_cast<double>(bits) + 1.0) * (1.0 / 9007199254740992.0);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
};

// Compensated accumulation for long Monte Carlo sums.
class KahanSum {
public:
    void add(double x) {
        const double y = x - c_;
        const double t = sum_ + y;
        c_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const { return sum_; }

private:
    double sum_ = 0.0;
    double c_ = 0.0;
};

}  // namespace engagemax
