#pragma once

#include <cstdint>

namespace vomix {

/// SplitMix64. Every pseudo-random quantity in the engine (weights, random
/// selection scores, synthetic inputs) comes from this generator so that
/// outputs are bit-reproducible across platforms.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Top 24 bits as a uniform value in [0, 1); exactly representable in float.
  double uniform() { return static_cast<double>(next() >> 40) * (1.0 / 16777216.0); }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::uint64_t state_;
};

/// Weight-initialization value: top-24-bit uniform mapped to [-0.02, 0.02).
inline float init_value(SplitMix64& rng) {
  return static_cast<float>(0.04 * rng.uniform() - 0.02);
}

}  // namespace vomix
