#pragma once

#include <optional>
#include <vector>

#include "vomix/attention.hpp"
#include "vomix/image.hpp"
#include "vomix/schedule.hpp"
#include "vomix/strategy.hpp"
#include "vomix/vit_config.hpp"
#include "vomix/weights.hpp"

namespace vomix {

struct ForwardOptions {
  PruneSchedule schedule;
  StrategyConfig strategy;
  /// Indices never pruned; defaults to the class token when the model has one.
  std::optional<IndexVector> protected_tokens;
};

struct ForwardResult {
  VectorF logits;
  std::vector<LayerTrace<float>> traces;
  /// Tokens after the last block, before the final norm.
  TokenState<float> final_state;
  /// Original index of every surviving token.
  IndexVector origin;
  /// Token count entering each block, plus the final count.
  std::vector<Index> trajectory;
};

/// Non-overlapping patches flattened as (channel, row, col), projected, class
/// token prepended, positional embedding added. All sizes start at 1.
TokenState<float> patch_embed(const ImageTensor& image, const WeightStore& w, const ViTConfig& cfg);

/// x + fc2(GELU(fc1(LN(x)))) for one block.
MatrixF mlp_block(const MatrixF& x, const WeightStore& w, Index block);

/// Final norm and head. Reads the class token when `class_row` is set,
/// otherwise pools with weights s_i / sum(s).
VectorF classify(const TokenState<float>& state, const WeightStore& w, bool class_row);

/// Pre-norm blocks with vote-and-mix attention at the scheduled ratios.
ForwardResult forward(const TokenState<float>& tokens, const WeightStore& w, const ViTConfig& cfg,
                      const ForwardOptions& opts);
ForwardResult forward(const ImageTensor& image, const WeightStore& w, const ViTConfig& cfg,
                      const ForwardOptions& opts);

/// Standard ViT forward with plain self-attention and no reduction.
VectorF forward_vanilla(const TokenState<float>& tokens, const WeightStore& w, const ViTConfig& cfg);
VectorF forward_vanilla(const ImageTensor& image, const WeightStore& w, const ViTConfig& cfg);

}  // namespace vomix
