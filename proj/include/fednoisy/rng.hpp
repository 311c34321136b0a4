#pragma once

// Deterministic counter-based random streams. Every consumer derives its own
// stream from (master seed, repeat, purpose, client, round), so results do not
// depend on call order or thread count and any draw can be replayed.

#include <cmath>
#include <cstdint>

namespace fednoisy {

constexpr std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
    return splitmix64(a ^ (0x9e3779b97f4a7c15ULL + (b << 6) + (b >> 2) + b));
}

enum class StreamPurpose : std::uint64_t {
    TaskData = 1,
    Partition = 2,
    Init = 3,
    Batch = 4,
    ChannelNoise = 5,
    Probe = 6,
};

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(splitmix64(seed)) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in (0, 1)
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
    }

    // standard normal via Box-Muller; the spare value is cached
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // uniform integer in [0, bound)
    std::uint64_t below(std::uint64_t bound) {
        // rejection sampling to avoid modulo bias
        std::uint64_t threshold = (0ULL - bound) % bound;
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

  private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

inline Rng derive_stream(std::uint64_t master_seed, std::uint64_t repeat,
                         StreamPurpose purpose, std::uint64_t client = 0,
                         std::uint64_t round = 0) {
    std::uint64_t h = hash_combine(master_seed, repeat);
    h = hash_combine(h, static_cast<std::uint64_t>(purpose));
    h = hash_combine(h, client);
    h = hash_combine(h, round);
    return Rng(h);
}

}  // namespace fednoisy
