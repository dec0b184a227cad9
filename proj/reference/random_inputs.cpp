#include "random_inputs.hpp"

#include <algorithm>
#include <cmath>

#include "naive_block.hpp"

namespace vomix::reference {

AttentionWeights<float> OwnedAttentionWeights::view() const {
  using MatMap = AttentionWeights<float>::MatMap;
  using VecMap = AttentionWeights<float>::VecMap;
  return AttentionWeights<float>{
      VecMap(norm_gamma.data(), norm_gamma.size()),
      VecMap(norm_beta.data(), norm_beta.size()),
      MatMap(qkv_weight.data(), qkv_weight.rows(), qkv_weight.cols()),
      VecMap(qkv_bias.data(), qkv_bias.size()),
      MatMap(proj_weight.data(), proj_weight.rows(), proj_weight.cols()),
      VecMap(proj_bias.data(), proj_bias.size()),
      heads};
}

namespace {

void fill(Eigen::Ref<MatrixF> m, SplitMix64& rng, double lo, double hi) {
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = static_cast<float>(rng.uniform(lo, hi));
}

void fill(VectorF& v, SplitMix64& rng, double lo, double hi) {
  for (Index i = 0; i < v.size(); ++i) v(i) = static_cast<float>(rng.uniform(lo, hi));
}

}  // namespace

OwnedAttentionWeights random_attention_weights(Index d, Index heads, SplitMix64& rng) {
  const double a = 1.0 / std::sqrt(static_cast<double>(d));
  OwnedAttentionWeights w;
  w.heads = heads;
  w.norm_gamma.resize(d);
  w.norm_beta.resize(d);
  w.qkv_weight.resize(d, 3 * d);
  w.qkv_bias.resize(3 * d);
  w.proj_weight.resize(d, d);
  w.proj_bias.resize(d);
  fill(w.norm_gamma, rng, 0.8, 1.2);
  fill(w.norm_beta, rng, -0.1, 0.1);
  fill(w.qkv_weight, rng, -a, a);
  fill(w.qkv_bias, rng, -0.1, 0.1);
  fill(w.proj_weight, rng, -a, a);
  fill(w.proj_bias, rng, -0.1, 0.1);
  return w;
}

MatrixF random_tokens(Index n, Index d, SplitMix64& rng, double lo, double hi) {
  MatrixF x(n, d);
  fill(x, rng, lo, hi);
  return x;
}

VectorF random_sizes(Index n, double total, SplitMix64& rng) {
  std::vector<double> raw(static_cast<std::size_t>(n));
  double sum = 0;
  for (double& v : raw) {
    v = rng.uniform(0.2, 3.0);
    sum += v;
  }
  VectorF s(n);
  for (Index i = 0; i < n; ++i) s(i) = static_cast<float>(raw[static_cast<std::size_t>(i)] * total / sum);
  return s;
}

StrategyConfig random_strategy(SplitMix64& rng) {
  auto pick = [&rng](int n) { return static_cast<int>(rng.next() % static_cast<std::uint64_t>(n)); };
  StrategyConfig s;
  s.selection = static_cast<Selection>(pick(3));
  s.random_seed = rng.next();
  s.fanout = static_cast<Fanout>(pick(3));
  s.feature = static_cast<Feature>(pick(3));
  s.metric = static_cast<Metric>(pick(3));
  s.query_mix = static_cast<QueryMix>(pick(3));
  s.attn_mix = static_cast<AttnMix>(pick(3));
  return s;
}

OracleTrial run_oracle_trial(std::uint64_t seed, bool default_strategy) {
  SplitMix64 rng(seed);
  static constexpr double kRatios[] = {0.1, 0.25, 0.4};
  static constexpr Index kDims[][2] = {{8, 1}, {8, 2}, {16, 2}, {16, 4}, {24, 3}, {32, 4}, {32, 8}};

  OracleTrial t;
  t.seed = seed;
  t.tokens = 4 + static_cast<Index>(rng.next() % 61);
  const auto& dims = kDims[rng.next() % std::size(kDims)];
  t.dim = dims[0];
  t.heads = dims[1];
  t.ratio = kRatios[rng.next() % 3];
  t.strategy = default_strategy ? StrategyConfig{} : random_strategy(rng);
  const bool with_class_token = rng.next() % 2 == 0;
  const Index layer = static_cast<Index>(rng.next() % 12);

  const OwnedAttentionWeights w = random_attention_weights(t.dim, t.heads, rng);
  TokenState<float> state;
  state.x = random_tokens(t.tokens, t.dim, rng);
  state.sizes = random_sizes(t.tokens, static_cast<double>(t.tokens) * rng.uniform(1.0, 3.0), rng);
  state.layer = layer;
  const IndexVector protected_tokens = with_class_token ? IndexVector{0} : IndexVector{};

  const auto engine = vomix_attention_block(state, w.view(), t.ratio, t.strategy, protected_tokens);
  const auto naive = naive_block(state.x, state.sizes, w.view(), t.ratio, t.strategy, protected_tokens, layer);

  t.partition_match = engine.trace.partition.pruned == naive.pruned &&
                      engine.trace.partition.retained == naive.retained;
  if (t.partition_match && engine.state.x.rows() == naive.x.rows()) {
    t.max_abs_diff = (engine.state.x - naive.x).cwiseAbs().maxCoeff();
    t.max_size_diff = ((engine.state.sizes - naive.sizes).cwiseAbs().array() / naive.sizes.array()).maxCoeff();
  } else {
    t.max_abs_diff = std::numeric_limits<double>::infinity();
    t.max_size_diff = std::numeric_limits<double>::infinity();
  }
  return t;
}

}  // namespace vomix::reference
