#pragma once

// Dense kernels shared by every layer of the engine. All matrices are
// row-major; a token occupies one row.

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "vomix/errors.hpp"
#include "vomix/op_counter.hpp"

namespace vomix {

using Index = Eigen::Index;
using IndexVector = std::vector<Index>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using MatrixF = Matrix<float>;
using VectorF = Vector<float>;
using MatrixD = Matrix<double>;
using VectorD = Vector<double>;

template <typename Scalar>
constexpr Scalar neg_inf() {
  return -std::numeric_limits<Scalar>::infinity();
}

namespace detail {

// Test hook used by `selftest --inject-tiebreak-fault`: flips the
// lowest-index-wins rule so the self test can prove it detects it.
inline std::atomic<bool>& tie_break_fault() {
  static std::atomic<bool> flag{false};
  return flag;
}

inline std::string shape_str(Index r, Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace detail

/// c = a * b. One op per multiply-accumulate is added to `category`.
template <typename DerivedA, typename DerivedB>
Matrix<typename DerivedA::Scalar> matmul(const Eigen::MatrixBase<DerivedA>& a,
                                         const Eigen::MatrixBase<DerivedB>& b,
                                         OpCategory category = OpCategory::kDense) {
  if (a.cols() != b.rows()) {
    throw ConfigError("matmul: dimension mismatch " + detail::shape_str(a.rows(), a.cols()) +
                      " * " + detail::shape_str(b.rows(), b.cols()));
  }
  ops::add(category, static_cast<std::uint64_t>(a.rows()) * a.cols() * b.cols());
  Matrix<typename DerivedA::Scalar> c(a.rows(), b.cols());
  c.noalias() = a * b;
  return c;
}

/// Row-wise softmax with max subtraction. -inf entries map to exactly 0.
template <typename Derived>
Matrix<typename Derived::Scalar> row_softmax(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  Matrix<Scalar> out(m.rows(), m.cols());
  for (Index i = 0; i < m.rows(); ++i) {
    const Scalar row_max = m.row(i).maxCoeff();
    if (m.cols() == 0 || row_max == neg_inf<Scalar>()) {
      throw ConfigError("row_softmax: empty softmax support in row " + std::to_string(i));
    }
    Scalar sum = 0;
    for (Index j = 0; j < m.cols(); ++j) {
      const Scalar x = m(i, j);
      const Scalar e = x == neg_inf<Scalar>() ? Scalar(0) : std::exp(x - row_max);
      out(i, j) = e;
      sum += e;
    }
    out.row(i) /= sum;
  }
  ops::add(OpCategory::kElementwise, static_cast<std::uint64_t>(m.size()));
  return out;
}

/// Per-row normalization to zero mean and unit (biased) variance, then affine.
template <typename Derived, typename DerivedG, typename DerivedB>
Matrix<typename Derived::Scalar> layer_norm(const Eigen::MatrixBase<Derived>& x,
                                            const Eigen::MatrixBase<DerivedG>& gamma,
                                            const Eigen::MatrixBase<DerivedB>& beta,
                                            typename Derived::Scalar eps = 1e-6) {
  using Scalar = typename Derived::Scalar;
  if (gamma.size() != x.cols() || beta.size() != x.cols()) {
    throw ConfigError("layer_norm: gamma/beta length must equal " + std::to_string(x.cols()));
  }
  Matrix<Scalar> out(x.rows(), x.cols());
  const Scalar inv_d = Scalar(1) / static_cast<Scalar>(x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    const Scalar mean = x.row(i).sum() * inv_d;
    const Scalar var = (x.row(i).array() - mean).square().sum() * inv_d;
    const Scalar inv_std = Scalar(1) / std::sqrt(var + eps);
    for (Index j = 0; j < x.cols(); ++j) {
      out(i, j) = (x(i, j) - mean) * inv_std * gamma(j) + beta(j);
    }
  }
  ops::add(OpCategory::kElementwise, static_cast<std::uint64_t>(x.size()));
  return out;
}

/// Exact (erf) GELU, in place.
template <typename Derived>
void gelu_inplace(Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const Scalar inv_sqrt2 = Scalar(0.70710678118654752440);
  x = x.unaryExpr([inv_sqrt2](Scalar v) { return Scalar(0.5) * v * (Scalar(1) + std::erf(v * inv_sqrt2)); });
  ops::add(OpCategory::kElementwise, static_cast<std::uint64_t>(x.size()));
}

/// Stable descending argsort; equal values keep ascending index order.
template <typename Derived>
IndexVector argsort_desc(const Eigen::DenseBase<Derived>& v) {
  IndexVector idx(static_cast<std::size_t>(v.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  if (detail::tie_break_fault().load(std::memory_order_relaxed)) {
    std::reverse(idx.begin(), idx.end());
  }
  std::stable_sort(idx.begin(), idx.end(), [&v](Index a, Index b) { return v(a) > v(b); });
  return idx;
}

/// Index of the largest entry; the lowest index wins ties.
template <typename Derived>
Index argmax(const Eigen::DenseBase<Derived>& v) {
  const bool fault = detail::tie_break_fault().load(std::memory_order_relaxed);
  Index best = 0;
  for (Index j = 1; j < v.size(); ++j) {
    if (v(j) > v(best) || (fault && v(j) == v(best))) best = j;
  }
  return best;
}

/// Rows of `m` at `rows`, in the given order.
template <typename Derived>
Matrix<typename Derived::Scalar> gather_rows(const Eigen::MatrixBase<Derived>& m,
                                             std::span<const Index> rows) {
  Matrix<typename Derived::Scalar> out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

template <typename Derived>
Vector<typename Derived::Scalar> gather(const Eigen::MatrixBase<Derived>& v,
                                        std::span<const Index> idx) {
  Vector<typename Derived::Scalar> out(static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Index>(i)) = v(idx[i]);
  return out;
}

/// Submatrix m[rows, cols].
template <typename Derived>
Matrix<typename Derived::Scalar> gather_block(const Eigen::MatrixBase<Derived>& m,
                                              std::span<const Index> rows,
                                              std::span<const Index> cols) {
  Matrix<typename Derived::Scalar> out(static_cast<Index>(rows.size()),
                                       static_cast<Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      out(static_cast<Index>(i), static_cast<Index>(j)) = m(rows[i], cols[j]);
  return out;
}

}  // namespace vomix
