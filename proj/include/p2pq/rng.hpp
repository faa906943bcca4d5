#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace p2pq {

/// SplitMix64 step; used to expand seeds and to hash (seed, index) pairs.
constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t hash_seed(std::uint64_t base, std::uint64_t index) noexcept {
    std::uint64_t s = base;
    const std::uint64_t a = splitmix64(s);
    s = a ^ (index * 0xd1b54a32d192ed03ULL);
    return splitmix64(s);
}

/// xoshiro256++ (Blackman & Vigna). jump() advances by 2^128 draws, so
/// streams obtained by k successive jumps from one seed never overlap.
class Xoshiro256pp {
public:
    using result_type = std::uint64_t;

    explicit Xoshiro256pp(std::uint64_t seed) noexcept {
        std::uint64_t sm = seed;
        for (auto& word : s_) word = splitmix64(sm);
    }

    /// Generator seeded from `seed` and jumped `stream` times.
    static Xoshiro256pp for_stream(std::uint64_t seed, std::uint64_t stream) noexcept {
        Xoshiro256pp g(seed);
        for (std::uint64_t k = 0; k < stream; ++k) g.jump();
        return g;
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

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

    void jump() noexcept {
        constexpr std::array<std::uint64_t, 4> kJump = {0x180ec6d33cfd0abaULL, 0xd5a61266f0c9392cULL,
                                                        0xa9582618e03fc9aaULL, 0x39abdc4529b1661cULL};
        std::array<std::uint64_t, 4> acc{};
        for (const std::uint64_t word : kJump) {
            for (int b = 0; b < 64; ++b) {
                if (word & (std::uint64_t{1} << b)) {
                    for (std::size_t i = 0; i < 4; ++i) acc[i] ^= s_[i];
                }
                (*this)();
            }
        }
        s_ = acc;
    }

    /// Uniform on (0, 1], 53 bits.
    double uniform_open0() noexcept {
        return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53;
    }

    /// Uniform on [0, 1), 53 bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    double exponential(double rate) noexcept { return -std::log(uniform_open0()) / rate; }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> s_{};
};

}  // namespace p2pq
