#pragma once

#include <cmath>
#include <string>

#include "vomix/errors.hpp"
#include "vomix/tensor.hpp"

namespace vomix {

inline void check_ratio(double r) {
  if (!(r >= 0.0 && r < 1.0)) {
    throw ConfigError("pruning ratio " + std::to_string(r) + " outside [0, 1)");
  }
}

/// Number of tokens a layer prunes: floor((n - protected) * r).
///
/// The product is nudged by 1e-9 before flooring so that ratios written as
/// short decimals (0.29 * 100) floor to the intended integer rather than
/// one below it. This is the single definition shared by the engine and the
/// cost model, so their trajectories agree exactly.
inline Index pruned_count(Index n, Index n_protected, double r) {
  check_ratio(r);
  const Index prunable = n - n_protected;
  if (prunable <= 0) return 0;
  const auto k = static_cast<Index>(std::floor(static_cast<double>(prunable) * r + 1e-9));
  return k < prunable ? k : prunable - 1;
}

}  // namespace vomix
