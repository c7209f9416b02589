#pragma once

#include <cstdint>
#include <string_view>

namespace gossip {

// Deterministic, platform-independent randomness. std::uniform_int_distribution
// is implementation-defined, so all bounded draws are done by hand here.
// Every run derives one named sub-stream per concern (topology, each protocol
// phase, failure sampling, ...) from a master seed, so adding a consumer never
// perturbs the draws of another.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t hash_tag(std::string_view tag, std::uint64_t salt = 0) {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ salt;
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// xoshiro256++ (Blackman/Vigna, public domain reference implementation).
class Rng {
public:
    Rng() : Rng(0) {}

    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    static Rng stream(std::uint64_t master_seed, std::string_view tag, std::uint64_t salt = 0) {
        std::uint64_t sm = master_seed ^ hash_tag(tag, salt);
        splitmix64(sm);
        return Rng(splitmix64(sm));
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

    // Uniform in [0, bound), unbiased (Lemire with rejection).
    std::uint64_t below(std::uint64_t bound) {
        __uint128_t m = static_cast<__uint128_t>(next()) * bound;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < bound) {
            const std::uint64_t threshold = (0ULL - bound) % bound;
            while (lo < threshold) {
                m = static_cast<__uint128_t>(next()) * bound;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    std::uint32_t below32(std::uint32_t bound) {
        return static_cast<std::uint32_t>(below(bound));
    }

    // Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p) {
        if (p <= 0.0) return false;
        if (p >= 1.0) return true;
        return uniform() < p;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4];
};

// Stable per-cell seed: depends only on the listed fields, never on sweep order.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view algorithm,
                                 std::uint64_t n, std::uint64_t f, std::uint64_t repetition) {
    std::uint64_t sm = master;
    sm ^= hash_tag(algorithm);
    splitmix64(sm);
    sm ^= splitmix64(sm) + n;
    sm ^= splitmix64(sm) + f;
    sm ^= splitmix64(sm) + repetition;
    return splitmix64(sm);
}

} // namespace gossip
