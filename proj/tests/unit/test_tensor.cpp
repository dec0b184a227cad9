#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "vomix/errors.hpp"
#include "vomix/rng.hpp"
#include "vomix/tensor.hpp"

using namespace vomix;

namespace {

MatrixF random_matrix(Index r, Index c, std::uint64_t seed) {
  SplitMix64 rng(seed);
  MatrixF m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(rng.uniform(-1, 1));
  return m;
}

}  // namespace

TEST_SUITE("tensor") {

TEST_CASE("matmul small cases") {
  MatrixF a(2, 2);
  a << 1, 2, 3, 4;
  MatrixF b(2, 1);
  b << 5, 6;
  const MatrixF c = matmul(a, b);
  CHECK(c(0, 0) == 17);
  CHECK(c(1, 0) == 39);

  const MatrixF m = random_matrix(2, 5, 1);
  CHECK(matmul(MatrixF::Identity(2, 2), m) == m);
  CHECK(matmul(MatrixF::Zero(3, 2), m).isZero());
}

TEST_CASE("matmul rejects mismatched shapes") {
  CHECK_THROWS_AS(matmul(MatrixF::Zero(2, 3), MatrixF::Zero(2, 3)), ConfigError);
}

TEST_CASE("matmul associativity on 32x32") {
  const MatrixF a = random_matrix(32, 32, 2);
  const MatrixF b = random_matrix(32, 32, 3);
  const MatrixF v = random_matrix(32, 1, 4);
  const MatrixF left = matmul(matmul(a, b), v);
  const MatrixF right = matmul(a, matmul(b, v));
  CHECK((left - right).norm() <= 1e-4 * right.norm());
}

TEST_CASE("matmul counts multiply-accumulates") {
  ScopedOpCount count;
  matmul(MatrixF::Zero(3, 4), MatrixF::Zero(4, 5));
  CHECK(count.elapsed().dense == 60);
}

TEST_CASE("row_softmax") {
  MatrixF m(3, 3);
  m << 0, 0, 0, 0.9f, 0.2f, 0, 2, neg_inf<float>(), 0;
  m(1, 2) = neg_inf<float>();
  const MatrixF s = row_softmax(m);
  for (Index j = 0; j < 3; ++j) CHECK(s(0, j) == doctest::Approx(1.0 / 3));
  CHECK(s(1, 0) == doctest::Approx(0.6682).epsilon(1e-3));
  CHECK(s(1, 1) == doctest::Approx(0.3318).epsilon(1e-3));
  CHECK(s(1, 2) == 0.0f);
  CHECK(s(2, 1) == 0.0f);

  MatrixF one(1, 2);
  one << 5, neg_inf<float>();
  const MatrixF t = row_softmax(one);
  CHECK(t(0, 0) == 1.0f);
  CHECK(t(0, 1) == 0.0f);
}

TEST_CASE("row_softmax rows sum to one for finite input") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    MatrixF m = random_matrix(8, 17, seed) * 30.0f;
    const MatrixF s = row_softmax(m);
    for (Index i = 0; i < s.rows(); ++i) CHECK(std::abs(s.row(i).sum() - 1.0f) <= 1e-6f);
  }
}

TEST_CASE("row_softmax with empty support throws") {
  MatrixF m = MatrixF::Constant(1, 3, neg_inf<float>());
  CHECK_THROWS_WITH_AS(row_softmax(m), doctest::Contains("empty softmax support"), ConfigError);
}

TEST_CASE("layer_norm") {
  VectorF one = VectorF::Ones(2);
  VectorF zero = VectorF::Zero(2);
  MatrixF x(2, 2);
  x << 1, 3, 5, 5;
  const MatrixF y = layer_norm(x, one, zero);
  CHECK(y(0, 0) == doctest::Approx(-1).epsilon(1e-5));
  CHECK(y(0, 1) == doctest::Approx(1).epsilon(1e-5));
  CHECK(y.row(1).isZero());

  VectorF beta(2);
  beta << 0.25f, -2;
  const MatrixF z = layer_norm(x, zero, beta);
  for (Index i = 0; i < 2; ++i) {
    CHECK(z(i, 0) == 0.25f);
    CHECK(z(i, 1) == -2.0f);
  }
}

TEST_CASE("gelu matches the erf form") {
  MatrixF x(1, 3);
  x << -1, 0, 2;
  gelu_inplace(x);
  CHECK(x(0, 0) == doctest::Approx(-0.158655).epsilon(1e-5));
  CHECK(x(0, 1) == 0.0f);
  CHECK(x(0, 2) == doctest::Approx(1.954500).epsilon(1e-5));
}

TEST_CASE("argsort_desc") {
  VectorF v(3);
  v << 0.9f, 1.1f, 0.0f;
  CHECK(argsort_desc(v) == IndexVector{1, 0, 2});
  CHECK(argsort_desc(VectorF::Constant(5, 2.0f)) == IndexVector{0, 1, 2, 3, 4});
  CHECK(argsort_desc(VectorF::Constant(1, 7.0f)) == IndexVector{0});
}

TEST_CASE("argsort_desc is a stable permutation under duplicates") {
  SplitMix64 rng(9);
  VectorF v(40);
  for (Index i = 0; i < v.size(); ++i) v(i) = static_cast<float>(static_cast<int>(rng.uniform() * 5));
  const IndexVector order = argsort_desc(v);
  IndexVector sorted = order;
  std::sort(sorted.begin(), sorted.end());
  IndexVector iota(40);
  std::iota(iota.begin(), iota.end(), Index{0});
  CHECK(sorted == iota);
  for (std::size_t i = 1; i < order.size(); ++i) {
    const float a = v(order[i - 1]);
    const float b = v(order[i]);
    CHECK(a >= b);
    if (a == b) CHECK(order[i - 1] < order[i]);
  }
}

TEST_CASE("argmax picks the lowest index on ties") {
  VectorF v(4);
  v << 1, 3, 3, 2;
  CHECK(argmax(v) == 1);
}

}  // TEST_SUITE
