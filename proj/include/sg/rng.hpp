#pragma once
#include <cstdint>
#include <random>

namespace sg {

// splitmix64: decorrelates user seeds and derives substream seeds.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

struct RngStream {
    std::mt19937_64 eng;

    explicit RngStream(uint64_t seed) : eng(splitmix64(seed)) {}
    // independent substream k of a base seed
    RngStream(uint64_t seed, uint64_t k) : eng(splitmix64(splitmix64(seed) + k)) {}

    double uniform() {
        return std::uniform_real_distribution<double>(0.0, 1.0)(eng);
    }
    double normal() {
        return std::normal_distribution<double>(0.0, 1.0)(eng);
    }
    uint64_t integer(uint64_t n) {  // uniform in [0, n)
        return std::uniform_int_distribution<uint64_t>(0, n - 1)(eng);
    }
};

}  // namespace sg
