#pragma once

#include <cmath>
#include <cstdint>

namespace ggbm::rng {

// Identifies one reproducible stream. Distinct stream_index values give
// statistically independent streams; the mapping to generator state is a
// pure function of (master_seed, stream_index, substream), so any path can
// be regenerated in isolation.
struct SeedSpec {
    uint64_t master_seed = 0;
    uint64_t stream_index = 0;
};

inline uint64_t splitmix64(uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// xoshiro256++ (Blackman & Vigna, public domain reference implementation)
class Xoshiro256 {
  public:
    Xoshiro256(uint64_t master, uint64_t stream, uint64_t substream) {
        uint64_t h = master;
        (void)splitmix64(h);
        h ^= 0x6a09e667f3bcc909ull * (stream + 1);
        (void)splitmix64(h);
        h ^= 0xbb67ae8584caa73bull * (substream + 1);
        for (auto& word : s_) word = splitmix64(h);
    }

    uint64_t next() {
        uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform on (0,1)
    double uniform_open() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

    // uniform on (0,1]
    double uniform_left_open() { return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53; }

    double exponential() { return -std::log(uniform_left_open()); }

    // Box-Muller; two uniforms per pair, one draw cached
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double r = std::sqrt(-2.0 * std::log(uniform_left_open()));
        double a = 2.0 * M_PI * uniform_open();
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

  private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    uint64_t s_[4];
    double cached_ = 0.0;
    bool have_cached_ = false;
};

inline Xoshiro256 make_stream(const SeedSpec& seed, uint64_t substream) {
    return Xoshiro256(seed.master_seed, seed.stream_index, substream);
}

}  // namespace ggbm::rng
