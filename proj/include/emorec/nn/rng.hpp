#pragma once

#include <cstdint>
#include <span>
#include <utility>

namespace emorec::nn {

/// Seeded xoshiro256** generator (state expanded from the seed with
/// SplitMix64). All derived draws are computed here rather than through
/// <random> distributions, whose output is implementation-defined, so a seed
/// reproduces the same sequence on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Unbiased integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }
  /// Standard normal via Box-Muller.
  double normal();
  /// Poisson draw (Knuth multiplication; intended for small means).
  std::uint64_t poisson(double mean);

  /// Independent child generator; advances this one by a single draw.
  Rng split() { return Rng(next_u64()); }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t state_[4];
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace emorec::nn
