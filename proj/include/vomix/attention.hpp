#pragma once

// Vote-and-mix attention: tokens vote for their most similar neighbour, the
// most-voted tokens are pruned, their queries are mixed into the retained
// ones with size bookkeeping, and the mixed queries attend to the full,
// unmixed key/value set with a log-size bias.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vomix/strategy.hpp"
#include "vomix/tensor.hpp"
#include "vomix/token_count.hpp"

namespace vomix {

/// Token embeddings together with their accumulated mixed sizes.
/// Sizes start at 1 and always sum to the original token count under the
/// global and max query-mix modes.
template <typename Scalar>
struct TokenState {
  Matrix<Scalar> x;
  Vector<Scalar> sizes;
  Index layer = 0;

  Index tokens() const { return x.rows(); }
  Index dim() const { return x.cols(); }

  static TokenState unit(Matrix<Scalar> x) {
    TokenState s;
    s.sizes = Vector<Scalar>::Ones(x.rows());
    s.x = std::move(x);
    return s;
  }
};

/// Queries, keys and values as N x D matrices. Head h owns the columns
/// [h * head_dim, (h + 1) * head_dim), which is the flattened view of an
/// H x N x head_dim tensor.
template <typename Scalar>
struct AttentionProjections {
  Matrix<Scalar> q;
  Matrix<Scalar> k;
  Matrix<Scalar> v;
  Index heads = 1;

  Index tokens() const { return q.rows(); }
  Index dim() const { return q.cols(); }
  Index head_dim() const { return q.cols() / heads; }

  const Matrix<Scalar>& feature(Feature f) const {
    switch (f) {
      case Feature::kQuery: return q;
      case Feature::kKey: return k;
      case Feature::kValue: return v;
    }
    return k;
  }

  void check() const {
    if (heads < 1 || q.cols() % heads != 0) {
      throw ConfigError("head count " + std::to_string(heads) + " does not divide dim " +
                        std::to_string(q.cols()));
    }
    if (k.rows() != q.rows() || v.rows() != q.rows() || k.cols() != q.cols() ||
        v.cols() != q.cols()) {
      throw ConfigError("q/k/v shapes disagree");
    }
  }
};

/// Top-1 vote target per token and the similarity-weighted tally received.
template <typename Scalar>
struct VoteResult {
  IndexVector target;
  Vector<Scalar> score;
};

/// Disjoint pruned / retained index sets, each ascending.
struct Partition {
  IndexVector pruned;
  IndexVector retained;
};

template <typename Scalar>
struct MixedQueries {
  Matrix<Scalar> q;       // retained x D
  Vector<Scalar> sizes;   // sizes after mixing, one per retained token
  Matrix<Scalar> weights; // effective pruned x retained mixing matrix
  bool mass_conserved = true;
};

/// Non-owning views of one block's attention parameters. Linear layers are
/// stored input-major (in x out) so that y = x * W + b.
template <typename Scalar>
struct AttentionWeights {
  using MatMap = Eigen::Map<const Matrix<Scalar>>;
  using VecMap = Eigen::Map<const Vector<Scalar>>;

  VecMap norm_gamma;
  VecMap norm_beta;
  MatMap qkv_weight;  // D x 3D, columns [q | k | v]
  VecMap qkv_bias;
  MatMap proj_weight; // D x D
  VecMap proj_bias;
  Index heads;
};

/// Everything the provenance tracker and the CLI need about one layer.
template <typename Scalar>
struct LayerTrace {
  Index layer = 0;
  Index tokens_in = 0;
  Partition partition;
  Matrix<Scalar> weights;  // effective mixing weights, pruned x retained
  Vector<Scalar> sizes_before;
  Vector<Scalar> sizes_after;
  QueryMix query_mix = QueryMix::kGlobal;
  bool mass_conserved = true;
};

// ---------------------------------------------------------------------------
// Similarity

/// Pairwise similarity of the head-wise mean of a projected feature.
/// cosine: normalized dot product (a zero vector has similarity 0 to all);
/// l2: negative Euclidean distance; dot: raw dot product. Diagonal is -inf.
template <typename Scalar>
Matrix<Scalar> compute_similarity(const AttentionProjections<Scalar>& proj, Feature feature,
                                  Metric metric) {
  proj.check();
  const Index n = proj.tokens();
  if (n < 2) throw ConfigError("similarity needs at least 2 tokens, got " + std::to_string(n));
  const Index dh = proj.head_dim();
  const Matrix<Scalar>& f = proj.feature(feature);

  Matrix<Scalar> mean = f.leftCols(dh);
  for (Index h = 1; h < proj.heads; ++h) mean += f.middleCols(h * dh, dh);
  mean *= Scalar(1) / static_cast<Scalar>(proj.heads);
  ops::add(OpCategory::kElementwise, static_cast<std::uint64_t>(n) * dh);

  Matrix<Scalar> a;
  switch (metric) {
    case Metric::kCosine: {
      for (Index i = 0; i < n; ++i) {
        const Scalar norm = mean.row(i).norm();
        if (norm > Scalar(0)) {
          mean.row(i) /= norm;
        } else {
          mean.row(i).setZero();
        }
      }
      ops::add(OpCategory::kElementwise, static_cast<std::uint64_t>(n) * dh);
      a = matmul(mean, mean.transpose(), OpCategory::kOverhead);
      break;
    }
    case Metric::kDot:
      a = matmul(mean, mean.transpose(), OpCategory::kOverhead);
      break;
    case Metric::kL2: {
      a.resize(n, n);
      for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) {
          const Scalar d = -(mean.row(i) - mean.row(j)).norm();
          a(i, j) = d;
          a(j, i) = d;
        }
      }
      ops::add(OpCategory::kOverhead, static_cast<std::uint64_t>(n) * (n - 1) / 2 * dh);
      break;
    }
  }
  a.diagonal().setConstant(neg_inf<Scalar>());
  return a;
}

// ---------------------------------------------------------------------------
// Voting and selection

/// Votes per token for fanout top-m: 1, 2, or floor(n * r) clamped to [1, n-1].
inline Index fanout_votes(Fanout fanout, Index n, double r) {
  Index m = 1;
  if (fanout == Fanout::kTop2) m = 2;
  if (fanout == Fanout::kTopR) m = static_cast<Index>(std::floor(static_cast<double>(n) * r + 1e-9));
  return std::clamp<Index>(m, 1, std::max<Index>(1, n - 1));
}

/// Each token votes for its most similar other token(s), weighted by the
/// similarity; a token's score is the total weight it receives. `r` only
/// matters for the top-r fanout.
template <typename Scalar>
VoteResult<Scalar> vote_scores(const Matrix<Scalar>& similarity, Fanout fanout = Fanout::kTop1,
                               double r = 0.0) {
  const Index n = similarity.rows();
  VoteResult<Scalar> out;
  out.target.resize(static_cast<std::size_t>(n));
  out.score = Vector<Scalar>::Zero(n);
  const Index m = fanout_votes(fanout, n, r);
  for (Index i = 0; i < n; ++i) {
    if (m == 1) {
      const Index z = argmax(similarity.row(i));
      out.target[static_cast<std::size_t>(i)] = z;
      if (z != i) out.score(z) += similarity(i, z);
      continue;
    }
    const IndexVector order = argsort_desc(similarity.row(i));
    out.target[static_cast<std::size_t>(i)] = order.front();
    for (Index t = 0; t < m; ++t) {
      const Index j = order[static_cast<std::size_t>(t)];
      if (j != i) out.score(j) += similarity(i, j);
    }
  }
  ops::add(OpCategory::kOverhead, static_cast<std::uint64_t>(n) * n);
  return out;
}

/// Prunes floor((n - |protected|) * r) of the highest-scoring unprotected
/// tokens. Ties go to the lower index.
template <typename Scalar>
Partition select_tokens(const Vector<Scalar>& score, double r,
                        std::span<const Index> protected_tokens = {}) {
  check_ratio(r);
  const Index n = score.size();
  std::vector<char> is_protected(static_cast<std::size_t>(n), 0);
  Index n_protected = 0;
  for (Index p : protected_tokens) {
    if (p < 0 || p >= n) {
      throw ConfigError("protected index " + std::to_string(p) + " out of range for " +
                        std::to_string(n) + " tokens");
    }
    if (!is_protected[static_cast<std::size_t>(p)]) ++n_protected;
    is_protected[static_cast<std::size_t>(p)] = 1;
  }
  const Index k = pruned_count(n, n_protected, r);

  Partition part;
  std::vector<char> pruned(static_cast<std::size_t>(n), 0);
  if (k > 0) {
    for (Index i : argsort_desc(score)) {
      if (static_cast<Index>(part.pruned.size()) == k) break;
      if (is_protected[static_cast<std::size_t>(i)]) continue;
      part.pruned.push_back(i);
      pruned[static_cast<std::size_t>(i)] = 1;
    }
    std::sort(part.pruned.begin(), part.pruned.end());
  }
  part.retained.reserve(static_cast<std::size_t>(n - k));
  for (Index i = 0; i < n; ++i) {
    if (!pruned[static_cast<std::size_t>(i)]) part.retained.push_back(i);
  }
  return part;
}

// ---------------------------------------------------------------------------
// Mixing

/// Softmax over the similarities of each pruned token to the retained set.
template <typename Scalar>
Matrix<Scalar> mixture_weights(const Matrix<Scalar>& similarity, const Partition& part) {
  const auto kp = static_cast<Index>(part.pruned.size());
  const auto nr = static_cast<Index>(part.retained.size());
  if (kp == 0) return Matrix<Scalar>(0, nr);
  ops::add(OpCategory::kOverhead, static_cast<std::uint64_t>(kp) * nr);
  return row_softmax(gather_block(similarity, part.pruned, part.retained));
}

/// Row-wise one-hot at the argmax of each row.
template <typename Scalar>
Matrix<Scalar> one_hot_rows(const Matrix<Scalar>& w) {
  Matrix<Scalar> out = Matrix<Scalar>::Zero(w.rows(), w.cols());
  for (Index j = 0; j < w.rows(); ++j) out(j, argmax(w.row(j))) = Scalar(1);
  return out;
}

/// Mixes the pruned queries into the retained ones.
///
/// global: q_i <- (q_i s_i + sum_j W_ji q_j s_j) / s_i', s_i' = s_i + sum_j W_ji s_j
/// max:    the same with W replaced by its row-wise one-hot argmax
/// none:   pruned queries and sizes are dropped; total size is not conserved
template <typename Scalar>
MixedQueries<Scalar> mix_queries(const AttentionProjections<Scalar>& proj,
                                 const Vector<Scalar>& sizes, const Partition& part,
                                 const Matrix<Scalar>& weights, QueryMix mode) {
  const auto kp = static_cast<Index>(part.pruned.size());
  const auto nr = static_cast<Index>(part.retained.size());
  const Index d = proj.dim();
  if (sizes.size() != proj.tokens()) throw ConfigError("sizes length must equal token count");

  MixedQueries<Scalar> out;
  if (kp == 0) {
    out.q = proj.q;
    out.sizes = sizes;
    out.weights = Matrix<Scalar>(0, nr);
    return out;
  }
  if (mode == QueryMix::kNone) {
    out.q = gather_rows(proj.q, part.retained);
    out.sizes = gather(sizes, part.retained);
    out.weights = Matrix<Scalar>::Zero(kp, nr);
    out.mass_conserved = false;
    return out;
  }
  if (weights.rows() != kp || weights.cols() != nr) {
    throw ConfigError("mixture weights must be " + detail::shape_str(kp, nr));
  }

  const Vector<Scalar> s_pruned = gather(sizes, part.pruned);
  const Vector<Scalar> s_kept = gather(sizes, part.retained);
  Matrix<Scalar> q_pruned = gather_rows(proj.q, part.pruned);
  Matrix<Scalar> acc = gather_rows(proj.q, part.retained);
  q_pruned.array().colwise() *= s_pruned.array();
  acc.array().colwise() *= s_kept.array();
  ops::add(OpCategory::kElementwise, static_cast<std::uint64_t>(kp + nr) * d);

  if (mode == QueryMix::kMax) {
    out.weights = one_hot_rows(weights);
    out.sizes = s_kept;
    for (Index j = 0; j < kp; ++j) {
      const Index t = argmax(out.weights.row(j));
      acc.row(t) += q_pruned.row(j);
      out.sizes(t) += s_pruned(j);
    }
    ops::add(OpCategory::kOverhead, static_cast<std::uint64_t>(kp) * (d + 1));
  } else {
    out.weights = weights;
    acc += matmul(weights.transpose(), q_pruned, OpCategory::kOverhead);
    out.sizes = s_kept + weights.transpose() * s_pruned;
    ops::add(OpCategory::kOverhead, static_cast<std::uint64_t>(kp) * nr);
  }

  for (Index i = 0; i < nr; ++i) {
    if (!(out.sizes(i) > Scalar(0))) {
      throw InvariantError("mixed size of retained token " + std::to_string(i) +
                           " is not positive");
    }
  }
  acc.array().colwise() /= out.sizes.array();
  ops::add(OpCategory::kElementwise, static_cast<std::uint64_t>(nr) * d);
  out.q = std::move(acc);
  return out;
}

// ---------------------------------------------------------------------------
// Attention

/// Multi-head attention of the mixed queries over the layer's keys and
/// values, followed by the output projection.
///
/// prop:    softmax(q k^T / sqrt(d_head) + log s_prev) v over all keys
/// no_prop: the same without the log-size term
/// none:    plain attention over the retained keys/values only
template <typename Scalar, typename DerivedW, typename DerivedB>
Matrix<Scalar> proportional_attention(const Matrix<Scalar>& q_mixed,
                                      const AttentionProjections<Scalar>& proj,
                                      const Vector<Scalar>& sizes_prev,
                                      std::span<const Index> retained, AttnMix mode,
                                      const Eigen::MatrixBase<DerivedW>& out_weight,
                                      const Eigen::MatrixBase<DerivedB>& out_bias) {
  proj.check();
  const Index dh = proj.head_dim();
  const Index d = proj.dim();
  if (q_mixed.cols() != d) throw ConfigError("mixed queries must have dim " + std::to_string(d));

  Matrix<Scalar> keys_storage;
  Matrix<Scalar> values_storage;
  const Matrix<Scalar>* keys = &proj.k;
  const Matrix<Scalar>* values = &proj.v;
  if (mode == AttnMix::kNone && static_cast<Index>(retained.size()) != proj.tokens()) {
    keys_storage = gather_rows(proj.k, retained);
    values_storage = gather_rows(proj.v, retained);
    keys = &keys_storage;
    values = &values_storage;
  }

  RowVector<Scalar> log_sizes;
  if (mode == AttnMix::kProp) {
    if (sizes_prev.size() != proj.tokens()) {
      throw ConfigError("size vector length must equal key count");
    }
    log_sizes.resize(sizes_prev.size());
    for (Index j = 0; j < sizes_prev.size(); ++j) {
      if (!(sizes_prev(j) > Scalar(0))) {
        throw ConfigError("proportional attention: non-positive size at key " + std::to_string(j));
      }
      log_sizes(j) = std::log(sizes_prev(j));
    }
  }

  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));
  Matrix<Scalar> context(q_mixed.rows(), d);
  for (Index h = 0; h < proj.heads; ++h) {
    Matrix<Scalar> logits =
        matmul(q_mixed.middleCols(h * dh, dh), keys->middleCols(h * dh, dh).transpose());
    logits *= scale;
    if (mode == AttnMix::kProp) logits.rowwise() += log_sizes;
    const Matrix<Scalar> attn = row_softmax(logits);
    context.middleCols(h * dh, dh) = matmul(attn, values->middleCols(h * dh, dh));
  }
  Matrix<Scalar> out = matmul(context, out_weight);
  out.rowwise() += out_bias.transpose();
  return out;
}

// ---------------------------------------------------------------------------
// Block

template <typename Scalar>
AttentionProjections<Scalar> project_qkv(const Matrix<Scalar>& normed,
                                         const AttentionWeights<Scalar>& w) {
  const Index d = normed.cols();
  if (w.qkv_weight.rows() != d || w.qkv_weight.cols() != 3 * d) {
    throw ConfigError("qkv weight must be " + detail::shape_str(d, 3 * d));
  }
  Matrix<Scalar> qkv = matmul(normed, w.qkv_weight);
  qkv.rowwise() += w.qkv_bias.transpose();
  AttentionProjections<Scalar> proj;
  proj.q = qkv.leftCols(d);
  proj.k = qkv.middleCols(d, d);
  proj.v = qkv.rightCols(d);
  proj.heads = w.heads;
  proj.check();
  return proj;
}

/// Scores used to rank tokens for pruning under the configured selection.
template <typename Scalar>
Vector<Scalar> selection_scores(const Matrix<Scalar>& similarity, const StrategyConfig& strategy,
                                double r, Index layer) {
  switch (strategy.selection) {
    case Selection::kVote: return vote_scores(similarity, strategy.fanout, r).score;
    case Selection::kMaxSim: return max_sim_scores(similarity);
    case Selection::kRandom:
      return random_scores<Scalar>(similarity.rows(), layer_seed(strategy.random_seed, layer));
  }
  return {};
}

template <typename Scalar>
struct BlockOutput {
  TokenState<Scalar> state;
  LayerTrace<Scalar> trace;
};

/// Pre-norm attention sub-block with vote-and-mix reduction:
/// norm -> qkv -> similarity -> scores -> partition -> mixing weights ->
/// query mix -> attention over the full key set -> projection, plus the
/// residual of the unmixed retained rows. Returns n - k_p tokens.
template <typename Scalar>
BlockOutput<Scalar> vomix_attention_block(const TokenState<Scalar>& state,
                                          const AttentionWeights<Scalar>& w, double r,
                                          const StrategyConfig& strategy,
                                          std::span<const Index> protected_tokens = {}) {
  check_ratio(r);
  if (state.sizes.size() != state.tokens()) throw ConfigError("sizes length must equal token count");

  const Matrix<Scalar> normed = layer_norm(state.x, w.norm_gamma, w.norm_beta);
  const AttentionProjections<Scalar> proj = project_qkv(normed, w);

  BlockOutput<Scalar> out;
  LayerTrace<Scalar>& trace = out.trace;
  trace.layer = state.layer;
  trace.tokens_in = state.tokens();
  trace.query_mix = strategy.query_mix;
  trace.sizes_before = state.sizes;

  Matrix<Scalar> weights;
  if (state.tokens() >= 2) {
    const Matrix<Scalar> similarity = compute_similarity(proj, strategy.feature, strategy.metric);
    const Vector<Scalar> score = selection_scores(similarity, strategy, r, state.layer);
    trace.partition = select_tokens(score, r, protected_tokens);
    if (strategy.query_mix != QueryMix::kNone) weights = mixture_weights(similarity, trace.partition);
  } else {
    trace.partition.retained.assign(static_cast<std::size_t>(state.tokens()), 0);
  }
  const Partition& part = trace.partition;

  MixedQueries<Scalar> mixed = mix_queries(proj, state.sizes, part, weights, strategy.query_mix);
  const Matrix<Scalar> attended = proportional_attention(
      mixed.q, proj, state.sizes, part.retained, strategy.attn_mix, w.proj_weight, w.proj_bias);

  out.state.x = gather_rows(state.x, part.retained) + attended;
  out.state.sizes = mixed.sizes;
  out.state.layer = state.layer + 1;
  trace.weights = std::move(mixed.weights);
  trace.sizes_after = out.state.sizes;
  trace.mass_conserved = mixed.mass_conserved;
  return out;
}

/// Positions of the surviving protected tokens inside `retained`.
inline IndexVector remap_protected(std::span<const Index> protected_tokens,
                                   std::span<const Index> retained) {
  IndexVector out;
  for (Index p : protected_tokens) {
    auto it = std::lower_bound(retained.begin(), retained.end(), p);
    if (it != retained.end() && *it == p) out.push_back(static_cast<Index>(it - retained.begin()));
  }
  return out;
}

}  // namespace vomix
