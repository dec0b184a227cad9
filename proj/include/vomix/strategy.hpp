#pragma once

// Ablation axes for the reduction stage. Every axis plugs into the same
// block pipeline; the defaults reproduce the full vote-and-mix method.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vomix/rng.hpp"
#include "vomix/tensor.hpp"

namespace vomix {

enum class Selection { kVote, kMaxSim, kRandom };
enum class Fanout { kTop1, kTop2, kTopR };
enum class Feature { kQuery, kKey, kValue };
enum class Metric { kCosine, kL2, kDot };
enum class QueryMix { kGlobal, kMax, kNone };
enum class AttnMix { kProp, kNoProp, kNone };

struct StrategyConfig {
  Selection selection = Selection::kVote;
  std::uint64_t random_seed = 0;  // only read when selection == kRandom
  Fanout fanout = Fanout::kTop1;
  Feature feature = Feature::kKey;
  Metric metric = Metric::kCosine;
  QueryMix query_mix = QueryMix::kGlobal;
  AttnMix attn_mix = AttnMix::kProp;

  bool is_default() const;
  /// Compact "selection/fanout/feature/metric/query_mix/attn_mix" label.
  std::string label() const;

  friend bool operator==(const StrategyConfig&, const StrategyConfig&) = default;
};

std::string to_string(Selection v);
std::string to_string(Fanout v);
std::string to_string(Feature v);
std::string to_string(Metric v);
std::string to_string(QueryMix v);
std::string to_string(AttnMix v);

// Parsers accept the enum names used on the command line and in config
// files ("vote", "max_sim", "random", "top1", "k", "l2", "no_prop", ...).
// Unknown names throw ConfigError.
Selection parse_selection(const std::string& s);
Fanout parse_fanout(const std::string& s);
Feature parse_feature(const std::string& s);
Metric parse_metric(const std::string& s);
QueryMix parse_query_mix(const std::string& s);
AttnMix parse_attn_mix(const std::string& s);

/// Unvalidated strategy settings as they arrive from flags or a config file.
struct StrategySpec {
  std::optional<std::string> selection;
  std::optional<std::uint64_t> random_seed;
  std::optional<std::string> fanout;
  std::optional<std::string> feature;
  std::optional<std::string> metric;
  std::optional<std::string> query_mix;
  std::optional<std::string> attn_mix;
};

struct CheckedStrategy {
  StrategyConfig config;
  std::vector<std::string> warnings;
};

/// Fills defaults and parses names. A fanout given together with a
/// non-vote selection is accepted with a warning.
CheckedStrategy validate(const StrategySpec& spec);

/// Mean similarity of each token to all others; higher means more
/// homogeneous and is pruned first. The -inf diagonal is skipped.
template <typename Scalar>
Vector<Scalar> max_sim_scores(const Matrix<Scalar>& similarity) {
  const Index n = similarity.rows();
  Vector<Scalar> scores = Vector<Scalar>::Zero(n);
  if (n < 2) return scores;
  for (Index i = 0; i < n; ++i) {
    Scalar sum = 0;
    for (Index j = 0; j < n; ++j) {
      if (j != i) sum += similarity(i, j);
    }
    scores(i) = sum / static_cast<Scalar>(n - 1);
  }
  ops::add(OpCategory::kOverhead, static_cast<std::uint64_t>(n) * n);
  return scores;
}

/// Seeded uniform scores in [0, 1) from SplitMix64.
template <typename Scalar = float>
Vector<Scalar> random_scores(Index n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Vector<Scalar> scores(n);
  for (Index i = 0; i < n; ++i) scores(i) = static_cast<Scalar>(rng.uniform());
  return scores;
}

/// Seed used for random selection at a given layer.
inline std::uint64_t layer_seed(std::uint64_t seed, Index layer) {
  return seed ^ (0xD1B54A32D192ED03ULL * static_cast<std::uint64_t>(layer + 1));
}

}  // namespace vomix
