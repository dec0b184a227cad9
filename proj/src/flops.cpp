#include "vomix/flops.hpp"

#include <iomanip>

#include "vomix/token_count.hpp"

namespace vomix {

double FlopsReport::overhead_total() const {
  double sum = 0;
  for (const LayerFlops& l : layers) sum += l.overhead_ops();
  return sum;
}

std::vector<Index> token_trajectory(Index n0, const PruneSchedule& sched, Index protected_count) {
  if (n0 < 1) throw ConfigError("initial token count must be at least 1");
  std::vector<Index> traj{n0};
  Index n = n0;
  for (double r : sched.ratios) {
    n -= pruned_count(n, std::min(protected_count, n), r);
    traj.push_back(n);
  }
  return traj;
}

LayerFlops layer_flops(Index tokens_in, double r, const ViTConfig& cfg, Index protected_count,
                       bool vomix_enabled) {
  check_ratio(r);
  LayerFlops f;
  f.tokens_in = tokens_in;
  f.ratio = r;
  f.tokens_out = vomix_enabled ? tokens_in - pruned_count(tokens_in, std::min(protected_count, tokens_in), r)
                               : tokens_in;
  const double n = static_cast<double>(tokens_in);
  const double m = static_cast<double>(f.tokens_out);
  const double d = static_cast<double>(cfg.dim);
  const double h = static_cast<double>(cfg.heads);
  const double hidden = static_cast<double>(cfg.mlp_hidden());

  f.qkv = 3 * n * d * d;
  f.attention = 2 * m * n * d;
  f.out_proj = m * d * d;
  f.mlp = 2 * m * d * hidden;
  if (vomix_enabled) {
    const double mix = r * (1 - r);
    f.similarity = n * n * d / h;
    f.vote = n * n;
    f.mix_softmax = n * n * mix;
    f.query_mix = n * n * d * mix;
  }
  // two layer norms, attention softmax, GELU
  f.elementwise = n * d + m * d + h * m * n + m * hidden;
  return f;
}

FlopsReport model_flops(const ViTConfig& cfg, const PruneSchedule& sched, bool vomix_enabled) {
  return model_flops(cfg, sched, vomix_enabled, cfg.class_token ? 1 : 0);
}

FlopsReport model_flops(const ViTConfig& cfg, const PruneSchedule& sched, bool vomix_enabled,
                        Index protected_count) {
  cfg.check();
  if (sched.layers() != static_cast<std::size_t>(cfg.depth)) {
    throw ConfigError("schedule has " + std::to_string(sched.layers()) + " ratios, model has " +
                      std::to_string(cfg.depth) + " layers");
  }
  auto run = [&](bool enabled, const PruneSchedule& s) {
    FlopsReport rep;
    rep.patch_embed = static_cast<double>(cfg.patch_tokens()) * static_cast<double>(cfg.patch_dim()) *
                      static_cast<double>(cfg.dim);
    rep.head = static_cast<double>(cfg.dim) * static_cast<double>(cfg.classes);
    rep.total = rep.patch_embed + rep.head;
    Index n = cfg.tokens();
    for (std::size_t l = 0; l < s.layers(); ++l) {
      LayerFlops f = layer_flops(n, s.ratios[l], cfg, protected_count, enabled);
      f.layer = static_cast<Index>(l);
      rep.total += f.total();
      rep.elementwise += f.elementwise;
      n = f.tokens_out;
      rep.layers.push_back(f);
    }
    return rep;
  };
  FlopsReport report = run(vomix_enabled, sched);
  report.vanilla_total = run(false, PruneSchedule::zeros(sched.layers())).total;
  return report;
}

void write_flops_csv(std::ostream& out, const FlopsReport& report) {
  out << "layer,N_in,N_out,r,attn_ops,mlp_ops,overhead_ops\n";
  out << std::setprecision(17);
  double attn = 0, mlp = 0, overhead = 0;
  for (const LayerFlops& l : report.layers) {
    out << l.layer << ',' << l.tokens_in << ',' << l.tokens_out << ',' << l.ratio << ','
        << l.attn_ops() << ',' << l.mlp_ops() << ',' << l.overhead_ops() << '\n';
    attn += l.attn_ops();
    mlp += l.mlp_ops();
    overhead += l.overhead_ops();
  }
  const Index n_in = report.layers.empty() ? 0 : report.layers.front().tokens_in;
  const Index n_out = report.layers.empty() ? 0 : report.layers.back().tokens_out;
  out << "total," << n_in << ',' << n_out << ",," << attn << ',' << mlp << ',' << overhead << '\n';
}

}  // namespace vomix
