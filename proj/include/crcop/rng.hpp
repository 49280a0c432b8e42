#pragma once

#include <cmath>
#include <cstdint>

namespace crcop {

/// Mixes a 64-bit value through the splitmix64 finalizer.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for replication r derived from a base seed. Streams are independent
/// of the order replications are executed in, so parallel studies are
/// reproducible.
inline std::uint64_t replication_seed(std::uint64_t base_seed, std::uint64_t rep) {
    return splitmix64(base_seed ^ splitmix64(rep + 1));
}

/// xoshiro256++ generator with fully specified output sequence, so datasets
/// are bit-identical across platforms for a given seed. Variate transforms
/// (uniform, exponential, normal) are implemented here rather than with
/// <random> distributions, whose sequences are implementation-defined.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& word : state_) word = x = splitmix64(x);
    }

    std::uint64_t next_u64() {
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

    /// Uniform draw on the open interval (0, 1).
    double uniform() {
        return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1.0p-52;
    }

    /// Unit-rate exponential.
    double exponential() { return -std::log(uniform()); }

    /// Standard normal via Box-Muller (cosine branch).
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4];
};

} // namespace crcop
