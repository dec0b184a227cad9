#pragma once

// Seeded generators and trial runners shared by the self test and the
// acceptance suite.

#include <cstdint>
#include <string>
#include <vector>

#include "vomix/attention.hpp"
#include "vomix/rng.hpp"

namespace vomix::reference {

/// Owning storage behind an AttentionWeights view.
struct OwnedAttentionWeights {
  VectorF norm_gamma, norm_beta;
  MatrixF qkv_weight;
  VectorF qkv_bias;
  MatrixF proj_weight;
  VectorF proj_bias;
  Index heads = 1;

  AttentionWeights<float> view() const;
};

/// Linear weights uniform in +-1/sqrt(d), gamma near 1, small biases.
OwnedAttentionWeights random_attention_weights(Index d, Index heads, SplitMix64& rng);

MatrixF random_tokens(Index n, Index d, SplitMix64& rng, double lo = -1.0, double hi = 1.0);

/// Positive sizes summing to `total` (n tokens carrying `total` original tokens).
VectorF random_sizes(Index n, double total, SplitMix64& rng);

StrategyConfig random_strategy(SplitMix64& rng);

struct OracleTrial {
  std::uint64_t seed = 0;
  Index tokens = 0;
  Index dim = 0;
  Index heads = 0;
  double ratio = 0;
  StrategyConfig strategy;
  bool partition_match = false;
  double max_abs_diff = 0;     // block outputs
  double max_size_diff = 0;    // relative, mixed sizes
};

/// One engine-vs-naive comparison with N <= 64, D <= 32, r in {0.1, 0.25, 0.4},
/// all strategy axes sampled. `default_strategy` pins the strategy to defaults.
OracleTrial run_oracle_trial(std::uint64_t seed, bool default_strategy = false);

}  // namespace vomix::reference
