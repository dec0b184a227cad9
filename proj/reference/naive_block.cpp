#include "naive_block.hpp"

#include <cmath>
#include <cstdint>
#include <limits>

namespace vomix::reference {
namespace {

using Grid = std::vector<std::vector<float>>;

Grid zeros(Index rows, Index cols) {
  return Grid(static_cast<std::size_t>(rows), std::vector<float>(static_cast<std::size_t>(cols), 0.0f));
}

std::uint64_t splitmix(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Index of the largest value among candidates; the first (lowest) wins ties.
Index first_max(const std::vector<float>& v, const std::vector<bool>& excluded) {
  Index best = -1;
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (excluded[j]) continue;
    if (best < 0 || v[j] > v[static_cast<std::size_t>(best)]) best = static_cast<Index>(j);
  }
  return best;
}

}  // namespace

NaiveBlockResult naive_block(const MatrixF& x, const VectorF& sizes, const AttentionWeights<float>& w,
                             double r, const StrategyConfig& strategy,
                             const std::vector<Index>& protected_tokens, Index layer) {
  const Index n = x.rows();
  const Index d = x.cols();
  const Index heads = w.heads;
  const Index dh = d / heads;
  const float ninf = -std::numeric_limits<float>::infinity();

  // layer norm
  Grid h = zeros(n, d);
  for (Index i = 0; i < n; ++i) {
    float mean = 0;
    for (Index c = 0; c < d; ++c) mean += x(i, c);
    mean /= static_cast<float>(d);
    float var = 0;
    for (Index c = 0; c < d; ++c) var += (x(i, c) - mean) * (x(i, c) - mean);
    var /= static_cast<float>(d);
    const float inv = 1.0f / std::sqrt(var + 1e-6f);
    for (Index c = 0; c < d; ++c) h[i][c] = (x(i, c) - mean) * inv * w.norm_gamma(c) + w.norm_beta(c);
  }

  // q, k, v
  Grid q = zeros(n, d), k = zeros(n, d), v = zeros(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index o = 0; o < 3 * d; ++o) {
      float acc = 0;
      for (Index c = 0; c < d; ++c) acc += h[i][c] * w.qkv_weight(c, o);
      acc += w.qkv_bias(o);
      if (o < d) q[i][o] = acc;
      else if (o < 2 * d) k[i][o - d] = acc;
      else v[i][o - 2 * d] = acc;
    }
  }

  // head-wise mean of the chosen feature
  const Grid& feat = strategy.feature == Feature::kQuery ? q : strategy.feature == Feature::kValue ? v : k;
  Grid fbar = zeros(n, dh);
  for (Index i = 0; i < n; ++i)
    for (Index c = 0; c < dh; ++c) {
      float acc = 0;
      for (Index hh = 0; hh < heads; ++hh) acc += feat[i][hh * dh + c];
      fbar[i][c] = acc * (1.0f / static_cast<float>(heads));
    }

  // similarity with masked diagonal
  Grid a = zeros(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (i == j) {
        a[i][j] = ninf;
        continue;
      }
      float dot = 0, ni = 0, nj = 0, dist = 0;
      for (Index c = 0; c < dh; ++c) {
        dot += fbar[i][c] * fbar[j][c];
        ni += fbar[i][c] * fbar[i][c];
        nj += fbar[j][c] * fbar[j][c];
        dist += (fbar[i][c] - fbar[j][c]) * (fbar[i][c] - fbar[j][c]);
      }
      switch (strategy.metric) {
        case Metric::kCosine:
          a[i][j] = (ni > 0 && nj > 0) ? dot / (std::sqrt(ni) * std::sqrt(nj)) : 0.0f;
          break;
        case Metric::kDot: a[i][j] = dot; break;
        case Metric::kL2: a[i][j] = -std::sqrt(dist); break;
      }
    }
  }

  // scores
  std::vector<float> score(static_cast<std::size_t>(n), 0.0f);
  if (strategy.selection == Selection::kVote) {
    Index votes = 1;
    if (strategy.fanout == Fanout::kTop2) votes = 2;
    if (strategy.fanout == Fanout::kTopR) votes = static_cast<Index>(std::floor(static_cast<double>(n) * r + 1e-9));
    if (votes > n - 1) votes = n - 1;
    if (votes < 1) votes = 1;
    for (Index i = 0; i < n; ++i) {
      std::vector<bool> taken(static_cast<std::size_t>(n), false);
      taken[i] = true;
      for (Index t = 0; t < votes; ++t) {
        const Index z = first_max(a[i], taken);
        score[z] += a[i][z];
        taken[z] = true;
      }
    }
  } else if (strategy.selection == Selection::kMaxSim) {
    for (Index i = 0; i < n; ++i) {
      float acc = 0;
      for (Index j = 0; j < n; ++j)
        if (j != i) acc += a[i][j];
      score[i] = acc / static_cast<float>(n - 1);
    }
  } else {
    std::uint64_t state = strategy.random_seed ^ (0xD1B54A32D192ED03ULL * static_cast<std::uint64_t>(layer + 1));
    for (Index i = 0; i < n; ++i) {
      score[i] = static_cast<float>(static_cast<double>(splitmix(state) >> 40) / 16777216.0);
    }
  }

  // selection
  std::vector<bool> excluded(static_cast<std::size_t>(n), false);
  Index n_protected = 0;
  for (Index p : protected_tokens) {
    if (!excluded[p]) ++n_protected;
    excluded[p] = true;
  }
  Index kp = 0;
  if (n - n_protected > 0) {
    kp = static_cast<Index>(std::floor(static_cast<double>(n - n_protected) * r + 1e-9));
    if (kp >= n - n_protected) kp = n - n_protected - 1;
  }
  std::vector<bool> is_pruned(static_cast<std::size_t>(n), false);
  for (Index t = 0; t < kp; ++t) {
    const Index best = first_max(score, excluded);
    is_pruned[best] = true;
    excluded[best] = true;
  }
  NaiveBlockResult res;
  for (Index i = 0; i < n; ++i) (is_pruned[i] ? res.pruned : res.retained).push_back(i);
  const auto np = static_cast<Index>(res.pruned.size());
  const auto nr = static_cast<Index>(res.retained.size());

  // mixture weights: softmax of gathered similarities
  Grid wmix = zeros(np, nr);
  for (Index j = 0; j < np; ++j) {
    const auto& row = a[res.pruned[j]];
    float mx = ninf;
    for (Index i = 0; i < nr; ++i) mx = std::max(mx, row[res.retained[i]]);
    float sum = 0;
    for (Index i = 0; i < nr; ++i) {
      wmix[j][i] = std::exp(row[res.retained[i]] - mx);
      sum += wmix[j][i];
    }
    for (Index i = 0; i < nr; ++i) wmix[j][i] /= sum;
    if (strategy.query_mix == QueryMix::kMax) {
      Index best = 0;
      for (Index i = 1; i < nr; ++i)
        if (wmix[j][i] > wmix[j][best]) best = i;
      for (Index i = 0; i < nr; ++i) wmix[j][i] = i == best ? 1.0f : 0.0f;
    }
  }

  // query mix and size update
  Grid qmix = zeros(nr, d);
  res.sizes.resize(nr);
  for (Index i = 0; i < nr; ++i) {
    const Index ri = res.retained[i];
    if (np == 0 || strategy.query_mix == QueryMix::kNone) {
      for (Index c = 0; c < d; ++c) qmix[i][c] = q[ri][c];
      res.sizes(i) = sizes(ri);
      continue;
    }
    float s_new = sizes(ri);
    for (Index j = 0; j < np; ++j) s_new += wmix[j][i] * sizes(res.pruned[j]);
    for (Index c = 0; c < d; ++c) {
      float acc = q[ri][c] * sizes(ri);
      for (Index j = 0; j < np; ++j) acc += wmix[j][i] * q[res.pruned[j]][c] * sizes(res.pruned[j]);
      qmix[i][c] = acc / s_new;
    }
    res.sizes(i) = s_new;
  }

  // attention of mixed queries over keys/values
  std::vector<Index> keys;
  if (strategy.attn_mix == AttnMix::kNone) {
    keys = res.retained;
  } else {
    for (Index j = 0; j < n; ++j) keys.push_back(j);
  }
  const auto nk = static_cast<Index>(keys.size());
  const float scale = 1.0f / std::sqrt(static_cast<float>(dh));
  Grid ctx = zeros(nr, d);
  for (Index hh = 0; hh < heads; ++hh) {
    for (Index i = 0; i < nr; ++i) {
      std::vector<float> logit(static_cast<std::size_t>(nk));
      float mx = ninf;
      for (Index t = 0; t < nk; ++t) {
        float dot = 0;
        for (Index c = 0; c < dh; ++c) dot += qmix[i][hh * dh + c] * k[keys[t]][hh * dh + c];
        logit[t] = dot * scale;
        if (strategy.attn_mix == AttnMix::kProp) logit[t] += std::log(sizes(keys[t]));
        mx = std::max(mx, logit[t]);
      }
      float sum = 0;
      for (Index t = 0; t < nk; ++t) {
        logit[t] = std::exp(logit[t] - mx);
        sum += logit[t];
      }
      for (Index c = 0; c < dh; ++c) {
        float acc = 0;
        for (Index t = 0; t < nk; ++t) acc += logit[t] / sum * v[keys[t]][hh * dh + c];
        ctx[i][hh * dh + c] = acc;
      }
    }
  }

  // output projection plus residual of the unmixed retained rows
  res.x.resize(nr, d);
  for (Index i = 0; i < nr; ++i) {
    for (Index o = 0; o < d; ++o) {
      float acc = 0;
      for (Index c = 0; c < d; ++c) acc += ctx[i][c] * w.proj_weight(c, o);
      res.x(i, o) = x(res.retained[i], o) + acc + w.proj_bias(o);
    }
  }
  return res;
}

}  // namespace vomix::reference
