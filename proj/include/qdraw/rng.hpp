#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace qdraw {

/// Deterministic RNG wrapper. std::mt19937_64 has a pinned algorithm, but the
/// std distributions do not, so all draws go through fixed bit-level mappings
/// to keep runs bit-reproducible across standard libraries.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform double in [0, 1), 53 random mantissa bits.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be > 0.
    std::size_t uniform_index(std::size_t n) {
        return static_cast<std::size_t>(uniform() * static_cast<double>(n));
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Fisher-Yates shuffle with draws from this stream.
    template <typename T> void shuffle(std::vector<T> &v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = uniform_index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    /// Independent child stream for a named phase (init, shuffling, ...).
    Rng derive(std::uint64_t stream) const {
        return Rng(seed_ ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
    }

  private:
    std::uint64_t seed_;
    std::mt19937_64 gen_;
};

} // namespace qdraw
