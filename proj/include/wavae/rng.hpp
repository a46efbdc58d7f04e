#pragma once

#include <cstdint>
#include <vector>

#include "wavae/tensor.hpp"

namespace wavae {

/// Counter-based deterministic generator. Output n of a stream is the pure
/// function mix64(seed + (n+1) * 0x9E3779B97F4A7C15) (the SplitMix64
/// finalizer over a Weyl sequence), so identical seeds give identical streams
/// regardless of platform or call history. Normal draws use Box-Muller and
/// consume exactly two outputs each.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64();

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform01();

  /// Uniform in (0, 1]; safe as a log() argument.
  double uniform01_open();

  double uniform(double lo, double hi) { return lo + uniform01() * (hi - lo); }

  /// Standard normal via Box-Muller (no cached spare).
  double normal();

  /// Unbiased integer in [0, n) via multiply-shift reduction.
  std::uint64_t below(std::uint64_t n);

  /// Independent child stream; derivation is mix64(seed ^ mix64(stream+gamma)).
  Rng split(std::uint64_t stream) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t counter_ = 0;
};

/// i.i.d. standard normal draws filling `shape`; deterministic under the rng state.
Tensor gaussian_sample(Rng& rng, const Shape& shape);

}  // namespace wavae
