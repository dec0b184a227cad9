#include "vomix/model.hpp"

#include "vomix/vanilla.hpp"

namespace vomix {

TokenState<float> patch_embed(const ImageTensor& image, const WeightStore& w, const ViTConfig& cfg) {
  cfg.check();
  if (image.channels != cfg.channels || image.height != cfg.image_size ||
      image.width != cfg.image_size) {
    throw ConfigError("image is " + std::to_string(image.channels) + "x" +
                      std::to_string(image.height) + "x" + std::to_string(image.width) +
                      ", model expects " + std::to_string(cfg.channels) + "x" +
                      std::to_string(cfg.image_size) + "x" + std::to_string(cfg.image_size));
  }
  const Index p = cfg.patch_size;
  const Index g = cfg.grid();
  MatrixF patches(cfg.patch_tokens(), cfg.patch_dim());
  for (Index gy = 0; gy < g; ++gy) {
    for (Index gx = 0; gx < g; ++gx) {
      const Index row = gy * g + gx;
      Index col = 0;
      for (Index c = 0; c < cfg.channels; ++c)
        for (Index y = 0; y < p; ++y)
          for (Index x = 0; x < p; ++x) patches(row, col++) = image.at(c, gy * p + y, gx * p + x);
    }
  }
  MatrixF embedded = matmul(patches, w.matrix("patch_embed.weight"));
  embedded.rowwise() += w.vector("patch_embed.bias").transpose();

  MatrixF x(cfg.tokens(), cfg.dim);
  if (cfg.class_token) {
    x.row(0) = w.matrix("cls_token").row(0);
    x.bottomRows(cfg.patch_tokens()) = embedded;
  } else {
    x = embedded;
  }
  x += w.matrix("pos_embed");
  return TokenState<float>::unit(std::move(x));
}

MatrixF mlp_block(const MatrixF& x, const WeightStore& w, Index block) {
  const std::string p = "blocks." + std::to_string(block) + ".";
  const MatrixF normed = layer_norm(x, w.vector(p + "norm2.weight"), w.vector(p + "norm2.bias"));
  MatrixF hidden = matmul(normed, w.matrix(p + "mlp.fc1.weight"));
  hidden.rowwise() += w.vector(p + "mlp.fc1.bias").transpose();
  gelu_inplace(hidden);
  MatrixF out = matmul(hidden, w.matrix(p + "mlp.fc2.weight"));
  out.rowwise() += w.vector(p + "mlp.fc2.bias").transpose();
  return x + out;
}

VectorF classify(const TokenState<float>& state, const WeightStore& w, bool class_row) {
  const MatrixF normed = layer_norm(state.x, w.vector("norm.weight"), w.vector("norm.bias"));
  RowVector<float> pooled;
  if (class_row) {
    pooled = normed.row(0);
  } else {
    const VectorF weights = state.sizes / state.sizes.sum();
    pooled = weights.transpose() * normed;
  }
  RowVector<float> logits = matmul(pooled, w.matrix("head.weight"));
  logits += w.vector("head.bias").transpose();
  return logits.transpose();
}

ForwardResult forward(const TokenState<float>& tokens, const WeightStore& w, const ViTConfig& cfg,
                      const ForwardOptions& opts) {
  cfg.check();
  if (opts.schedule.layers() != static_cast<std::size_t>(cfg.depth)) {
    throw ConfigError("schedule has " + std::to_string(opts.schedule.layers()) +
                      " ratios, model has " + std::to_string(cfg.depth) + " layers");
  }
  if (tokens.dim() != cfg.dim) throw ConfigError("token dim does not match model dim");

  ForwardResult result;
  IndexVector protected_tokens = opts.protected_tokens.value_or(default_protected(cfg));
  result.origin.resize(static_cast<std::size_t>(tokens.tokens()));
  for (Index i = 0; i < tokens.tokens(); ++i) result.origin[static_cast<std::size_t>(i)] = i;

  TokenState<float> state = tokens;
  for (Index l = 0; l < cfg.depth; ++l) {
    result.trajectory.push_back(state.tokens());
    BlockOutput<float> out = vomix_attention_block(state, w.attention(l, cfg.heads),
                                                   opts.schedule.ratios[static_cast<std::size_t>(l)],
                                                   opts.strategy, protected_tokens);
    const IndexVector& retained = out.trace.partition.retained;
    protected_tokens = remap_protected(protected_tokens, retained);
    IndexVector origin;
    origin.reserve(retained.size());
    for (Index i : retained) origin.push_back(result.origin[static_cast<std::size_t>(i)]);
    result.origin = std::move(origin);

    state = std::move(out.state);
    state.x = mlp_block(state.x, w, l);
    result.traces.push_back(std::move(out.trace));
  }
  result.trajectory.push_back(state.tokens());
  const bool class_row = cfg.class_token && !result.origin.empty() && result.origin.front() == 0;
  result.logits = classify(state, w, class_row);
  result.final_state = std::move(state);
  return result;
}

ForwardResult forward(const ImageTensor& image, const WeightStore& w, const ViTConfig& cfg,
                      const ForwardOptions& opts) {
  return forward(patch_embed(image, w, cfg), w, cfg, opts);
}

VectorF forward_vanilla(const TokenState<float>& tokens, const WeightStore& w, const ViTConfig& cfg) {
  cfg.check();
  MatrixF x = tokens.x;
  for (Index l = 0; l < cfg.depth; ++l) {
    x = standard_attention_block(x, w.attention(l, cfg.heads));
    x = mlp_block(x, w, l);
  }
  TokenState<float> state;
  state.sizes = VectorF::Ones(x.rows());
  state.x = std::move(x);
  return classify(state, w, cfg.class_token);
}

VectorF forward_vanilla(const ImageTensor& image, const WeightStore& w, const ViTConfig& cfg) {
  return forward_vanilla(patch_embed(image, w, cfg), w, cfg);
}

}  // namespace vomix
