#pragma once

#include <string>
#include <vector>

namespace vomix {

/// Per-layer pruning ratios, one per transformer block, each in [0, 1).
struct PruneSchedule {
  std::vector<double> ratios;

  std::size_t layers() const { return ratios.size(); }
  bool all_zero() const;
  static PruneSchedule zeros(std::size_t layers) { return {std::vector<double>(layers, 0.0)}; }
};

/// Expands a schedule string for a model with `layers` blocks.
///
///   const:<a>:<b>      r_l = a for l < b, else 0
///   decr:<a>:<b>       r_l = a * (b - 1 - l) / (b - 1) for l < b, else 0
///                      (b = 1 prunes a at layer 0 only)
///   list:<r0>,<r1>,... explicit ratios, exactly `layers` entries
///
/// A truncated schedule is const:<a>:<layers / 2>. Throws ConfigError on a
/// malformed string, a ratio outside [0, 1), or b > layers.
PruneSchedule expand_schedule(const std::string& spec, std::size_t layers);

}  // namespace vomix
