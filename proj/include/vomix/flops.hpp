#pragma once

// Analytic cost model. Convention: one multiply-accumulate is one op.
// Softmax, normalization and GELU element-ops are tallied separately and
// are not part of the headline totals.

#include <ostream>
#include <string>
#include <vector>

#include "vomix/schedule.hpp"
#include "vomix/vit_config.hpp"

namespace vomix {

inline constexpr const char* kFlopsConvention = "one multiply-accumulate = one op";

struct LayerFlops {
  Index layer = 0;
  Index tokens_in = 0;
  Index tokens_out = 0;
  double ratio = 0.0;

  double qkv = 0;          // 3 N_in D^2
  double attention = 0;    // 2 N_out N_in D  (scores and weighted values)
  double out_proj = 0;     // N_out D^2
  double mlp = 0;          // 2 mlp_ratio N_out D^2
  double similarity = 0;   // N_in^2 D / H
  double vote = 0;         // N_in^2
  double mix_softmax = 0;  // N_in^2 r (1 - r)
  double query_mix = 0;    // N_in^2 D r (1 - r)
  double elementwise = 0;  // reported only

  double attn_ops() const { return qkv + attention + out_proj; }
  double mlp_ops() const { return mlp; }
  double overhead_ops() const { return similarity + vote + mix_softmax + query_mix; }
  double total() const { return attn_ops() + mlp_ops() + overhead_ops(); }
};

struct FlopsReport {
  std::vector<LayerFlops> layers;
  double patch_embed = 0;
  double head = 0;
  double total = 0;
  double elementwise = 0;
  /// Same model, no reduction and no vote overhead.
  double vanilla_total = 0;
  std::string convention = kFlopsConvention;

  /// Percentage change vs. vanilla (negative means cheaper).
  double reduction_pct() const { return vanilla_total > 0 ? (total / vanilla_total - 1.0) * 100.0 : 0.0; }
  double overhead_total() const;
};

/// Token count entering each layer plus the final count (L + 1 entries):
/// N_{l+1} = N_l - floor((N_l - protected) r_l).
std::vector<Index> token_trajectory(Index n0, const PruneSchedule& sched, Index protected_count);

/// Cost of one block entered by `tokens_in` tokens at ratio r. With vomix
/// disabled no tokens are removed and the overhead terms are zero.
LayerFlops layer_flops(Index tokens_in, double r, const ViTConfig& cfg, Index protected_count = 0,
                       bool vomix_enabled = true);

/// Front end + all blocks along the trajectory + head. `protected_count`
/// defaults to one class token when the model has one.
FlopsReport model_flops(const ViTConfig& cfg, const PruneSchedule& sched, bool vomix_enabled = true);
FlopsReport model_flops(const ViTConfig& cfg, const PruneSchedule& sched, bool vomix_enabled,
                        Index protected_count);

/// One row per layer (layer,N_in,N_out,r,attn_ops,mlp_ops,overhead_ops) and a
/// final "total" row.
void write_flops_csv(std::ostream& out, const FlopsReport& report);

}  // namespace vomix
