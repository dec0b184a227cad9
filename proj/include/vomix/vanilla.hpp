#pragma once

// Standard multi-head self-attention, kept separate from the vote-and-mix
// pipeline so the reduced path can be checked against it at r = 0.

#include "vomix/attention.hpp"

namespace vomix {

/// x + proj(MHSA(LN(x))).
template <typename Scalar>
Matrix<Scalar> standard_attention_block(const Matrix<Scalar>& x, const AttentionWeights<Scalar>& w) {
  const Index d = x.cols();
  const Index dh = d / w.heads;
  const Matrix<Scalar> normed = layer_norm(x, w.norm_gamma, w.norm_beta);
  Matrix<Scalar> qkv = matmul(normed, w.qkv_weight);
  qkv.rowwise() += w.qkv_bias.transpose();

  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));
  Matrix<Scalar> context(x.rows(), d);
  for (Index h = 0; h < w.heads; ++h) {
    const auto q = qkv.middleCols(h * dh, dh);
    const auto k = qkv.middleCols(d + h * dh, dh);
    const auto v = qkv.middleCols(2 * d + h * dh, dh);
    Matrix<Scalar> logits = matmul(q, k.transpose());
    logits *= scale;
    context.middleCols(h * dh, dh) = matmul(row_softmax(logits), v);
  }
  Matrix<Scalar> out = matmul(context, w.proj_weight);
  out.rowwise() += w.proj_bias.transpose();
  return x + out;
}

}  // namespace vomix
