#pragma once

// Random numbers for the simulator.
//
// Generator: xoshiro256++ (Blackman & Vigna), state seeded by four outputs of
// SplitMix64. Replicate k of an experiment with master seed m uses the
// stream seed
//
//     stream_seed(m, k) = splitmix64_mix(m ^ splitmix64_mix(k + 0x9E3779B97F4A7C15))
//
// so per-replicate streams depend only on (m, k), never on scheduling.

#include <cmath>
#include <cstdint>
#include <limits>

namespace twolocus {

constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t stream_seed(std::uint64_t master_seed, std::uint64_t index) noexcept {
    return splitmix64_mix(master_seed ^ splitmix64_mix(index + 0x9E3779B97F4A7C15ULL));
}

class Xoshiro256pp {
  public:
    using result_type = std::uint64_t;

    explicit Xoshiro256pp(std::uint64_t seed) noexcept {
        std::uint64_t sm = seed;
        for (auto& word : s_) {
            sm += 0x9E3779B97F4A7C15ULL;
            word = splitmix64_mix(sm);
        }
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
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

    // Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    // Standard exponential; 1 - uniform() lies in (0, 1].
    double exponential() noexcept { return -std::log(1.0 - uniform()); }

  private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4];
};

}  // namespace twolocus
