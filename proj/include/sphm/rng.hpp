#pragma once

#include <cstdint>
#include <vector>

namespace sphm {

/// Deterministic pseudo-random generator built on SplitMix64.
///
/// The standard library engines are portable but its distributions are not
/// specified bit-exactly, so every draw here (uniform, normal, bounded ints,
/// shuffling) is defined on top of next_u64() and reproduces the same stream
/// on any platform for the same seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64();

    /// Uniform double in [0, 1), 53 random bits.
    double uniform();
    double uniform(double lo, double hi);

    /// Standard normal via Box-Muller; the second value of each pair is cached.
    double normal();

    /// Uniform integer in [0, bound); unbiased rejection sampling.
    std::uint64_t below(std::uint64_t bound);

    /// Fisher-Yates shuffle driven by below().
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    /// Independent child generator for (seed, stream); used e.g. to reseed
    /// minibatch shuffling per epoch from the run seed.
    static Rng derive(std::uint64_t seed, std::uint64_t stream);

private:
    std::uint64_t state_;
    bool has_cached_normal_ = false;
    double cached_normal_ = 0.0;
};

}  // namespace sphm
