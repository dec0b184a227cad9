#pragma once

// Direct loop-by-loop transliteration of the vote-and-mix attention block,
// written without any of the engine's kernels. Used only as an oracle.

#include <vector>

#include "vomix/attention.hpp"

namespace vomix::reference {

struct NaiveBlockResult {
  std::vector<Index> pruned;
  std::vector<Index> retained;
  MatrixF x;
  VectorF sizes;
};

NaiveBlockResult naive_block(const MatrixF& x, const VectorF& sizes, const AttentionWeights<float>& w,
                             double r, const StrategyConfig& strategy,
                             const std::vector<Index>& protected_tokens, Index layer = 0);

}  // namespace vomix::reference
