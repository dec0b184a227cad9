#include <doctest.h>

#include <numeric>

#include "random_inputs.hpp"
#include "naive_block.hpp"
#include "vomix/attention.hpp"
#include "vomix/vanilla.hpp"

using namespace vomix;

namespace {

MatrixF three_token_similarity() {
  MatrixF a(3, 3);
  const float inf = neg_inf<float>();
  a << inf, 0.9f, 0.1f, 0.9f, inf, 0.2f, 0.1f, 0.2f, inf;
  return a;
}

AttentionProjections<float> keys_only(const MatrixF& k, Index heads) {
  AttentionProjections<float> p;
  p.q = MatrixF::Zero(k.rows(), k.cols());
  p.k = k;
  p.v = MatrixF::Zero(k.rows(), k.cols());
  p.heads = heads;
  return p;
}

float total(const VectorF& v) { return v.sum(); }

}  // namespace

TEST_SUITE("attention") {

TEST_CASE("similarity of identical keys is one") {
  const MatrixF k = MatrixF::Constant(4, 6, 0.3f);
  const MatrixF a = compute_similarity(keys_only(k, 2), Feature::kKey, Metric::kCosine);
  for (Index i = 0; i < 4; ++i) {
    for (Index j = 0; j < 4; ++j) {
      if (i == j) CHECK(a(i, j) == neg_inf<float>());
      else CHECK(a(i, j) == doctest::Approx(1.0f));
    }
  }
}

TEST_CASE("similarity of orthogonal keys") {
  MatrixF k(2, 2);
  k << 1, 0, 0, 1;
  const MatrixF a = compute_similarity(keys_only(k, 1), Feature::kKey, Metric::kCosine);
  CHECK(a(0, 1) == 0.0f);
  CHECK(a(0, 0) == neg_inf<float>());
  CHECK(a(1, 1) == neg_inf<float>());
}

TEST_CASE("similarity uses the head-wise mean") {
  // Token 0 has heads (1,0) and (0,1); its mean is (0.5, 0.5).
  MatrixF k(2, 4);
  k << 1, 0, 0, 1, 0.5f, 0.5f, 0.5f, 0.5f;
  const MatrixF a = compute_similarity(keys_only(k, 2), Feature::kKey, Metric::kCosine);
  CHECK(a(0, 1) == doctest::Approx(1.0f));

  MatrixF k2(2, 2);
  k2 << 3, 4, 0, 0;
  const MatrixF dot = compute_similarity(keys_only(k2, 1), Feature::kKey, Metric::kDot);
  const MatrixF l2 = compute_similarity(keys_only(k2, 1), Feature::kKey, Metric::kL2);
  const MatrixF cos = compute_similarity(keys_only(k2, 1), Feature::kKey, Metric::kCosine);
  CHECK(dot(0, 1) == 0.0f);
  CHECK(l2(0, 1) == doctest::Approx(-5.0f));
  CHECK(cos(0, 1) == 0.0f);  // zero-norm key
}

TEST_CASE("similarity feature selection and symmetry") {
  SplitMix64 rng(5);
  AttentionProjections<float> p;
  p.q = reference::random_tokens(6, 8, rng);
  p.k = reference::random_tokens(6, 8, rng);
  p.v = reference::random_tokens(6, 8, rng);
  p.heads = 2;
  for (Metric m : {Metric::kCosine, Metric::kL2, Metric::kDot}) {
    const MatrixF aq = compute_similarity(p, Feature::kQuery, m);
    const MatrixF ak = compute_similarity(p, Feature::kKey, m);
    CHECK_FALSE(aq.isApprox(ak));
    for (Index i = 0; i < 6; ++i) {
      for (Index j = i + 1; j < 6; ++j) {
        CHECK(ak(i, j) == doctest::Approx(ak(j, i)));
        if (m == Metric::kCosine) CHECK(std::abs(ak(i, j)) <= 1.0f + 1e-6f);
      }
    }
  }
}

TEST_CASE("similarity needs two tokens") {
  CHECK_THROWS_AS(compute_similarity(keys_only(MatrixF::Ones(1, 4), 1), Feature::kKey, Metric::kCosine),
                  ConfigError);
}

TEST_CASE("vote on the three-token example") {
  const VoteResult<float> v = vote_scores(three_token_similarity());
  CHECK(v.target == IndexVector{1, 0, 1});
  CHECK(v.score(0) == doctest::Approx(0.9f));
  CHECK(v.score(1) == doctest::Approx(1.1f));
  CHECK(v.score(2) == 0.0f);
}

TEST_CASE("equal similarities vote for the lowest non-self index") {
  const float c = 0.4f;
  MatrixF a = MatrixF::Constant(5, 5, c);
  a.diagonal().setConstant(neg_inf<float>());
  const VoteResult<float> v = vote_scores(a);
  CHECK(v.target[0] == 1);
  for (std::size_t i = 1; i < 5; ++i) CHECK(v.target[i] == 0);
  CHECK(v.score.sum() == doctest::Approx(5 * c));
}

TEST_CASE("top2 votes match brute force") {
  const MatrixF a = three_token_similarity();
  const VoteResult<float> v = vote_scores(a, Fanout::kTop2);
  // Each token votes for both others with weight A[j][i].
  VectorF expected = VectorF::Zero(3);
  for (Index j = 0; j < 3; ++j) {
    for (Index i = 0; i < 3; ++i) {
      if (i != j) expected(i) += a(j, i);
    }
  }
  for (Index i = 0; i < 3; ++i) CHECK(v.score(i) == doctest::Approx(expected(i)));
}

TEST_CASE("vote score mass equals the chosen similarities") {
  SplitMix64 rng(11);
  for (int t = 0; t < 20; ++t) {
    const Index n = 3 + static_cast<Index>(rng.uniform() * 30);
    MatrixF a = reference::random_tokens(n, n, rng);
    a = (a + a.transpose()).eval();
    a.diagonal().setConstant(neg_inf<float>());
    const VoteResult<float> v = vote_scores(a);
    float mass = 0;
    for (Index j = 0; j < n; ++j) {
      CHECK(v.target[static_cast<std::size_t>(j)] != j);
      mass += a(j, v.target[static_cast<std::size_t>(j)]);
    }
    CHECK(v.score.sum() == doctest::Approx(mass).epsilon(1e-5));
  }
}

TEST_CASE("topr vote count") {
  CHECK(fanout_votes(Fanout::kTopR, 100, 0.25) == 25);
  CHECK(fanout_votes(Fanout::kTopR, 10, 0.05) == 1);
  CHECK(fanout_votes(Fanout::kTopR, 3, 0.9) == 2);
  CHECK(fanout_votes(Fanout::kTop2, 2, 0.0) == 1);
}

TEST_CASE("select tokens") {
  VectorF score(3);
  score << 0.9f, 1.1f, 0.0f;
  Partition p = select_tokens(score, 1.0 / 3.0);
  CHECK(p.pruned == IndexVector{1});
  CHECK(p.retained == IndexVector{0, 2});

  p = select_tokens(score, 0.0);
  CHECK(p.pruned.empty());
  CHECK(p.retained == IndexVector{0, 1, 2});

  VectorF s2(4);
  s2 << 5, 1, 2, 3;
  const IndexVector prot{0};
  p = select_tokens(s2, 0.34, prot);
  CHECK(p.pruned == IndexVector{3});
  CHECK(p.retained == IndexVector{0, 1, 2});

  CHECK_THROWS_AS(select_tokens(score, 1.0), ConfigError);
  CHECK_THROWS_AS(select_tokens(score, -0.1), ConfigError);
}

TEST_CASE("select tokens breaks score ties by index") {
  VectorF score = VectorF::Constant(6, 1.0f);
  const Partition p = select_tokens(score, 0.5);
  CHECK(p.pruned == IndexVector{0, 1, 2});
}

TEST_CASE("mixture weights") {
  const MatrixF a = three_token_similarity();
  Partition part{{1}, {0, 2}};
  const MatrixF w = mixture_weights(a, part);
  REQUIRE(w.rows() == 1);
  REQUIRE(w.cols() == 2);
  CHECK(w(0, 0) == doctest::Approx(0.6682).epsilon(1e-3));
  CHECK(w(0, 1) == doctest::Approx(0.3318).epsilon(1e-3));

  MatrixF eq = MatrixF::Constant(4, 4, 0.3f);
  eq.diagonal().setConstant(neg_inf<float>());
  const MatrixF u = mixture_weights(eq, Partition{{3}, {0, 1, 2}});
  for (Index j = 0; j < 3; ++j) CHECK(u(0, j) == doctest::Approx(1.0 / 3));

  CHECK(mixture_weights(a, Partition{{}, {0, 1, 2}}).rows() == 0);
}

TEST_CASE("mix queries") {
  AttentionProjections<float> p;
  p.q = MatrixF::Constant(3, 4, 0.7f);
  p.k = p.q;
  p.v = p.q;
  p.heads = 2;
  const Partition part{{1}, {0, 2}};
  MatrixF w(1, 2);
  w << 0.6682f, 0.3318f;
  const VectorF ones = VectorF::Ones(3);

  const MixedQueries<float> g = mix_queries(p, ones, part, w, QueryMix::kGlobal);
  CHECK(g.q.isApprox(MatrixF::Constant(2, 4, 0.7f)));
  CHECK(g.sizes(0) == doctest::Approx(1.6682f));
  CHECK(g.sizes(1) == doctest::Approx(1.3318f));
  CHECK(total(g.sizes) == doctest::Approx(3.0f));
  CHECK(g.mass_conserved);

  const MixedQueries<float> m = mix_queries(p, ones, part, w, QueryMix::kMax);
  CHECK(m.sizes(0) == 2.0f);
  CHECK(m.sizes(1) == 1.0f);

  const MixedQueries<float> n = mix_queries(p, ones, part, w, QueryMix::kNone);
  CHECK(n.sizes.size() == 2);
  CHECK(total(n.sizes) == 2.0f);
  CHECK_FALSE(n.mass_conserved);
}

TEST_CASE("query mix weights by size") {
  AttentionProjections<float> p;
  p.q = MatrixF(2, 1);
  p.q << 1, 4;
  p.k = p.q;
  p.v = p.q;
  p.heads = 1;
  VectorF sizes(2);
  sizes << 3, 1;
  const MixedQueries<float> g =
      mix_queries(p, sizes, Partition{{1}, {0}}, MatrixF(MatrixF::Ones(1, 1)), QueryMix::kGlobal);
  CHECK(g.q(0, 0) == doctest::Approx((1 * 3 + 4 * 1) / 4.0));
  CHECK(g.sizes(0) == 4.0f);
}

TEST_CASE("proportional attention weights follow sizes") {
  AttentionProjections<float> p;
  p.q = MatrixF::Zero(2, 2);
  p.k = MatrixF::Zero(2, 2);
  p.v = MatrixF::Identity(2, 2);
  p.heads = 1;
  VectorF sizes(2);
  sizes << 1, 3;
  const IndexVector retained{0};
  const MatrixF eye = MatrixF::Identity(2, 2);
  const MatrixF q0 = MatrixF::Zero(1, 2);
  const VectorF zero = VectorF::Zero(2);
  const MatrixF out = proportional_attention(q0, p, sizes, retained, AttnMix::kProp, eye, zero);
  CHECK(out(0, 0) == doctest::Approx(0.25));
  CHECK(out(0, 1) == doctest::Approx(0.75));

  const MatrixF flat = proportional_attention(q0, p, sizes, retained, AttnMix::kNoProp, eye, zero);
  CHECK(flat(0, 0) == doctest::Approx(0.5));

  const MatrixF restricted = proportional_attention(q0, p, sizes, retained, AttnMix::kNone, eye, zero);
  CHECK(restricted(0, 0) == doctest::Approx(1.0));
  CHECK(restricted(0, 1) == doctest::Approx(0.0));

  VectorF bad(2);
  bad << 1, 0;
  CHECK_THROWS_AS(proportional_attention(q0, p, bad, retained, AttnMix::kProp, eye, zero),
                  ConfigError);
}

TEST_CASE("block with r = 0 equals standard attention") {
  SplitMix64 rng(21);
  const auto w = reference::random_attention_weights(16, 4, rng);
  const MatrixF x = reference::random_tokens(10, 16, rng);
  const BlockOutput<float> out =
      vomix_attention_block(TokenState<float>::unit(x), w.view(), 0.0, StrategyConfig{});
  const MatrixF expected = standard_attention_block(x, w.view());
  CHECK((out.state.x - expected).cwiseAbs().maxCoeff() <= 1e-5f);
  CHECK(out.state.sizes == VectorF::Ones(10));
}

TEST_CASE("block attn none with nothing pruned equals prop with unit sizes") {
  SplitMix64 rng(22);
  const auto w = reference::random_attention_weights(8, 2, rng);
  const MatrixF x = reference::random_tokens(6, 8, rng);
  StrategyConfig none;
  none.attn_mix = AttnMix::kNone;
  const auto a = vomix_attention_block(TokenState<float>::unit(x), w.view(), 0.0, none);
  const auto b = vomix_attention_block(TokenState<float>::unit(x), w.view(), 0.0, StrategyConfig{});
  CHECK((a.state.x - b.state.x).cwiseAbs().maxCoeff() <= 1e-6f);
}

TEST_CASE("block with seed 42 prunes one of four tokens and matches the reference") {
  SplitMix64 rng(42);
  const auto w = reference::random_attention_weights(8, 2, rng);
  const MatrixF x = reference::random_tokens(4, 8, rng);
  const auto out = vomix_attention_block(TokenState<float>::unit(x), w.view(), 0.25, StrategyConfig{});
  CHECK(out.trace.partition.pruned.size() == 1);
  CHECK(out.state.tokens() == 3);
  CHECK(out.state.sizes.sum() == doctest::Approx(4.0f));

  const auto naive = reference::naive_block(x, VectorF::Ones(4), w.view(), 0.25, StrategyConfig{}, {});
  CHECK(naive.pruned == out.trace.partition.pruned);
  CHECK((naive.x - out.state.x).cwiseAbs().maxCoeff() <= 1e-6f);
}

TEST_CASE("two blocks from eight tokens follow the floor rule") {
  SplitMix64 rng(8);
  const auto w = reference::random_attention_weights(8, 2, rng);
  TokenState<float> s = TokenState<float>::unit(reference::random_tokens(8, 8, rng));
  s = vomix_attention_block(s, w.view(), 0.25, StrategyConfig{}).state;
  CHECK(s.tokens() == 6);
  s = vomix_attention_block(s, w.view(), 0.25, StrategyConfig{}).state;
  CHECK(s.tokens() == 5);
  CHECK(s.layer == 2);
}

TEST_CASE("protected tokens are never pruned") {
  SplitMix64 rng(3);
  for (int t = 0; t < 30; ++t) {
    const auto w = reference::random_attention_weights(8, 2, rng);
    const MatrixF x = reference::random_tokens(12, 8, rng);
    const IndexVector prot{0, 5};
    const auto out = vomix_attention_block(TokenState<float>::unit(x), w.view(), 0.4, StrategyConfig{}, prot);
    const auto& r = out.trace.partition.retained;
    CHECK(std::binary_search(r.begin(), r.end(), 0));
    CHECK(std::binary_search(r.begin(), r.end(), 5));
    CHECK(out.trace.partition.pruned.size() == 4);
    CHECK(remap_protected(prot, r).size() == 2);
  }
}

TEST_CASE("single token passes through") {
  SplitMix64 rng(4);
  const auto w = reference::random_attention_weights(8, 2, rng);
  const MatrixF x = reference::random_tokens(1, 8, rng);
  const auto out = vomix_attention_block(TokenState<float>::unit(x), w.view(), 0.5, StrategyConfig{});
  CHECK(out.state.tokens() == 1);
  CHECK(out.trace.partition.pruned.empty());
}

TEST_CASE("oracle trials agree") {
  for (std::uint64_t seed = 100; seed < 160; ++seed) {
    const auto t = reference::run_oracle_trial(seed);
    CHECK_MESSAGE(t.partition_match, "seed ", seed, " ", t.strategy.label());
    CHECK(t.max_abs_diff <= 1e-6);
  }
}

}  // TEST_SUITE
