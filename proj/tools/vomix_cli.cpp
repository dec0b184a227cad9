// vomix: command-line front end.
//
// Exit codes: 0 success, 1 test/assertion failure, 2 configuration error.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "selftest.hpp"
#include "vomix/bench.hpp"
#include "vomix/flops.hpp"
#include "vomix/key_value.hpp"
#include "vomix/model.hpp"
#include "vomix/provenance.hpp"

namespace {

using namespace vomix;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

struct CommonFlags {
  std::string preset;
  std::string config;
  std::string schedule;
  std::string selection, fanout, feature, metric, query_mix, attn_mix;
  std::string protect = "default";
  std::uint64_t seed = 0;
  bool trace = false;
  std::string out;
  std::string weights;
  std::string image;
};

struct Resolved {
  ViTConfig cfg;
  std::string config_id;
  KeyValues kv;
  PruneSchedule schedule;
  std::string schedule_spec;
  StrategyConfig strategy;
  IndexVector protected_tokens;
};

void add_model_flags(CLI::App* app, CommonFlags& f) {
  app->add_option("--preset", f.preset, "Model preset (vit-toy, vit-s16-224, vit-b16-224, ...)");
  app->add_option("--config", f.config, "key = value config file (model, strategy, normalization)");
  app->add_option("--schedule", f.schedule, "Pruning schedule: const:a:b | decr:a:b | list:r0,r1,...");
  app->add_option("--protect", f.protect, "Protected token indices: default | none | i,j,...");
}

void add_strategy_flags(CLI::App* app, CommonFlags& f) {
  app->add_option("--selection", f.selection, "vote | max_sim | random");
  app->add_option("--fanout", f.fanout, "top1 | top2 | topr");
  app->add_option("--feature", f.feature, "q | k | v");
  app->add_option("--metric", f.metric, "cosine | l2 | dot");
  app->add_option("--query-mix", f.query_mix, "global | max | none");
  app->add_option("--attn-mix", f.attn_mix, "prop | no_prop | none");
}

IndexVector parse_protect(const std::string& text, const ViTConfig& cfg) {
  if (text == "default") return default_protected(cfg);
  if (text == "none" || text.empty()) return {};
  IndexVector out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v < 0) throw std::invalid_argument(item);
      out.push_back(static_cast<Index>(v));
    } catch (const std::exception&) {
      throw ConfigError("bad --protect entry '" + item + "'");
    }
  }
  return out;
}

Resolved resolve(const CommonFlags& f) {
  Resolved r;
  if (!f.config.empty()) r.kv = read_key_values(f.config);
  ViTConfig base = preset("vit-b16-224");
  r.config_id = "vit-b16-224";
  if (auto it = r.kv.find("preset"); it != r.kv.end()) r.config_id = it->second;
  if (!f.preset.empty()) {
    base = preset(f.preset);
    r.config_id = f.preset;
    r.kv.erase("preset");
  } else if (!f.config.empty() && r.kv.find("preset") == r.kv.end()) {
    r.config_id = f.config;
  }
  r.cfg = apply_model_config(r.kv, base);

  r.schedule_spec = f.schedule;
  if (r.schedule_spec.empty()) {
    auto it = r.kv.find("schedule");
    r.schedule_spec = it != r.kv.end() ? it->second : "const:0:0";
  }
  r.schedule = expand_schedule(r.schedule_spec, static_cast<std::size_t>(r.cfg.depth));

  StrategySpec spec = strategy_from_config(r.kv);
  auto over = [](std::optional<std::string>& dst, const std::string& flag) {
    if (!flag.empty()) dst = flag;
  };
  over(spec.selection, f.selection);
  over(spec.fanout, f.fanout);
  over(spec.feature, f.feature);
  over(spec.metric, f.metric);
  over(spec.query_mix, f.query_mix);
  over(spec.attn_mix, f.attn_mix);
  if (!spec.random_seed) spec.random_seed = f.seed;
  CheckedStrategy checked = validate(spec);
  for (const std::string& w : checked.warnings) std::cerr << "warning: " << w << '\n';
  r.strategy = checked.config;
  r.protected_tokens = parse_protect(f.protect, r.cfg);
  return r;
}

WeightStore obtain_weights(const CommonFlags& f, const ViTConfig& cfg) {
  WeightStore w = f.weights.empty() ? init_weights(cfg, f.seed) : load_weights(f.weights);
  check_weights(w, cfg);
  return w;
}

ImageTensor obtain_image(const CommonFlags& f, const Resolved& r) {
  if (f.image.empty()) return synthetic_image(r.cfg.channels, r.cfg.image_size, f.seed ^ 0x1a6eULL);
  return to_tensor(read_ppm(f.image), normalization_from_config(r.kv));
}

std::ostream& output(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path, std::ios::binary);
  if (!file) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  return file;
}

// ---------------------------------------------------------------------------

int cmd_flops(const CommonFlags& f, bool no_vomix) {
  const Resolved r = resolve(f);
  const FlopsReport rep =
      model_flops(r.cfg, r.schedule, !no_vomix, static_cast<Index>(r.protected_tokens.size()));
  std::cout << "model " << r.config_id << " (L=" << r.cfg.depth << " D=" << r.cfg.dim
            << " H=" << r.cfg.heads << " N=" << r.cfg.tokens() << "), schedule " << r.schedule_spec
            << "\nconvention: " << rep.convention << "\n\n";
  std::printf("%5s %6s %6s %7s %14s %14s %14s\n", "layer", "N_in", "N_out", "r", "attn_ops", "mlp_ops",
              "overhead_ops");
  for (const LayerFlops& l : rep.layers) {
    std::printf("%5ld %6ld %6ld %7.4f %14.0f %14.0f %14.0f\n", static_cast<long>(l.layer),
                static_cast<long>(l.tokens_in), static_cast<long>(l.tokens_out), l.ratio, l.attn_ops(),
                l.mlp_ops(), l.overhead_ops());
  }
  std::printf("\ntotal: %.2f G ops (%+.1f%% vs vanilla %.2f G)\n", rep.total / 1e9, rep.reduction_pct(),
              rep.vanilla_total / 1e9);
  std::printf("vomix overhead: %.3f G ops; element-ops (not in total): %.3f G\n",
              rep.overhead_total() / 1e9, rep.elementwise / 1e9);
  if (!f.out.empty()) {
    std::ofstream file;
    write_flops_csv(output(f.out, file), rep);
  }
  return kExitOk;
}

int cmd_init_weights(const CommonFlags& f) {
  if (f.out.empty()) throw ConfigError("init-weights needs --out");
  const Resolved r = resolve(f);
  save_weights(init_weights(r.cfg, f.seed), f.out);
  return kExitOk;
}

void print_trace(const ForwardResult& res) {
  IndexVector origin(static_cast<std::size_t>(res.trajectory.front()));
  for (std::size_t i = 0; i < origin.size(); ++i) origin[i] = static_cast<Index>(i);
  for (const auto& t : res.traces) {
    std::cout << "trace layer " << t.layer << ": " << t.tokens_in << " -> " << t.partition.retained.size()
              << " retained:";
    IndexVector next;
    for (Index i : t.partition.retained) {
      std::cout << ' ' << origin[static_cast<std::size_t>(i)];
      next.push_back(origin[static_cast<std::size_t>(i)]);
    }
    std::cout << '\n';
    origin = std::move(next);
  }
}

int cmd_forward(const CommonFlags& f, bool vanilla) {
  const Resolved r = resolve(f);
  const WeightStore w = obtain_weights(f, r.cfg);
  const ImageTensor image = obtain_image(f, r);
  VectorF logits;
  if (vanilla) {
    logits = forward_vanilla(image, w, r.cfg);
  } else {
    ForwardOptions opts{r.schedule, r.strategy, r.protected_tokens};
    ForwardResult res = forward(image, w, r.cfg, opts);
    logits = res.logits;
    if (f.trace) print_trace(res);
  }
  std::ofstream file;
  std::ostream& out = output(f.out, file);
  out << std::setprecision(9);
  for (Index i = 0; i < logits.size(); ++i) out << logits(i) << '\n';
  return kExitOk;
}

int cmd_bench(const CommonFlags& f, Index repeats, Index threads, Index batch,
              const std::vector<std::string>& schedules) {
  CommonFlags first = f;
  if (!schedules.empty()) first.schedule = schedules.front();
  const Resolved r = resolve(first);
  BenchOptions opts;
  opts.config_id = r.config_id;
  opts.cfg = r.cfg;
  opts.strategy = r.strategy;
  opts.batch = batch;
  opts.repeats = repeats;
  opts.seed = f.seed;
  opts.threads = threads;
  std::vector<std::string> list = schedules;
  if (list.empty()) list.push_back(r.schedule_spec);
  for (const std::string& s : list) expand_schedule(s, static_cast<std::size_t>(r.cfg.depth));
  std::ofstream file;
  sweep(opts, list, output(f.out, file));
  return kExitOk;
}

struct Traced {
  Resolved r;
  ForwardResult result;
  ProvenanceTracker tracker;
  GridLayout layout;
};

Traced run_traced(const CommonFlags& f, Index frames) {
  Resolved r = resolve(f);
  const WeightStore w = obtain_weights(f, r.cfg);
  const ImageTensor image = obtain_image(f, r);
  ForwardOptions opts{r.schedule, r.strategy, r.protected_tokens};
  ForwardResult res = forward(image, w, r.cfg, opts);
  ProvenanceTracker tracker(r.cfg.tokens());
  for (const auto& t : res.traces) tracker.update(t);
  if (frames < 1 || r.cfg.grid() % frames != 0) throw ConfigError("--frames must divide the patch grid height");
  GridLayout layout{r.cfg.grid() / frames, r.cfg.grid(), frames, r.cfg.class_token ? 1 : 0};
  if (f.trace) print_trace(res);
  return {std::move(r), std::move(res), std::move(tracker), layout};
}

int cmd_heatmap(const CommonFlags& f, Index token, Index scale, Index frames) {
  if (f.out.empty()) throw ConfigError("heatmap needs --out");
  const Traced t = run_traced(f, frames);
  write_ppm(render_heatmap(t.tracker.assignment(), token, t.layout, scale), f.out);
  std::cout << "token " << token << " of " << t.tracker.assignment().cols() << " -> " << f.out << '\n';
  return kExitOk;
}

int cmd_regionmap(const CommonFlags& f, Index scale, Index frames) {
  if (f.out.empty()) throw ConfigError("regionmap needs --out");
  const Traced t = run_traced(f, frames);
  const IndexVector dest = dominant_destinations(t.tracker.assignment(), t.layout);
  write_ppm(render_region_map(t.tracker.assignment(), t.layout, scale), f.out);
  std::vector<Index> distinct(dest.begin(), dest.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::cout << distinct.size() << " regions -> " << f.out << '\n';
  return kExitOk;
}

std::uint64_t fnv1a(const MatrixF& m) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(m.data());
  for (std::size_t i = 0; i < static_cast<std::size_t>(m.size()) * sizeof(float); ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<StrategyConfig> expand_grid(const std::string& grid, std::uint64_t seed) {
  std::map<std::string, std::vector<std::string>> axes;
  std::stringstream ss(grid);
  std::string clause;
  while (std::getline(ss, clause, ';')) {
    if (clause.empty()) continue;
    const auto eq = clause.find('=');
    if (eq == std::string::npos) throw ConfigError("grid clause '" + clause + "' needs axis=v1,v2");
    std::string axis = clause.substr(0, eq);
    std::replace(axis.begin(), axis.end(), '-', '_');
    std::stringstream vs(clause.substr(eq + 1));
    std::string v;
    auto& values = axes[axis];
    while (std::getline(vs, v, ',')) {
      if (std::find(values.begin(), values.end(), v) == values.end()) values.push_back(v);
    }
  }
  std::vector<StrategyConfig> combos{StrategyConfig{}};
  combos.front().random_seed = seed;
  for (const auto& [axis, values] : axes) {
    std::vector<StrategyConfig> next;
    for (const StrategyConfig& base : combos) {
      for (const std::string& v : values) {
        StrategyConfig c = base;
        if (axis == "selection") c.selection = parse_selection(v);
        else if (axis == "fanout") c.fanout = parse_fanout(v);
        else if (axis == "feature") c.feature = parse_feature(v);
        else if (axis == "metric") c.metric = parse_metric(v);
        else if (axis == "query_mix") c.query_mix = parse_query_mix(v);
        else if (axis == "attn_mix") c.attn_mix = parse_attn_mix(v);
        else throw ConfigError("unknown grid axis '" + axis + "'");
        next.push_back(c);
      }
    }
    combos = std::move(next);
  }
  const bool has_default =
      std::any_of(combos.begin(), combos.end(), [](const StrategyConfig& c) { return c.is_default(); });
  if (!has_default) {
    StrategyConfig d;
    d.random_seed = seed;
    combos.insert(combos.begin(), d);
  }
  return combos;
}

int cmd_ablate(const CommonFlags& f, const std::string& grid) {
  const Resolved r = resolve(f);
  const WeightStore w = obtain_weights(f, r.cfg);
  const ImageTensor image = obtain_image(f, r);
  std::ofstream file;
  std::ostream& out = output(f.out, file);
  out << "combo,selection,fanout,feature,metric,query_mix,attn_mix,default,final_tokens,checksum,ops\n";
  for (const StrategyConfig& s : expand_grid(grid, f.seed)) {
    ForwardOptions opts{r.schedule, s, r.protected_tokens};
    ScopedOpCount count;
    const ForwardResult res = forward(image, w, r.cfg, opts);
    const OpCounts ops = count.elapsed();
    char checksum[17];
    std::snprintf(checksum, sizeof checksum, "%016llx", static_cast<unsigned long long>(fnv1a(res.final_state.x)));
    out << s.label() << ',' << to_string(s.selection) << ',' << to_string(s.fanout) << ','
        << to_string(s.feature) << ',' << to_string(s.metric) << ',' << to_string(s.query_mix) << ','
        << to_string(s.attn_mix) << ',' << (s.is_default() ? 1 : 0) << ',' << res.final_state.tokens()
        << ',' << checksum << ',' << ops.headline() << '\n';
  }
  return kExitOk;
}

int cmd_selftest(int trials, bool inject_fault) {
  const SelftestReport report = run_selftest({trials, inject_fault});
  print_report(std::cout, report);
  return report.passed() ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vomix: ViT forward engine with vote-and-mix token reduction"};
  app.require_subcommand(1, 1);

  CommonFlags f;
  Index repeats = 5;
  Index threads = default_threads();
  Index batch = 1;
  Index token = 0;
  Index scale = 1;
  Index frames = 1;
  int trials = 200;
  bool inject_fault = false;
  bool no_vomix = false;
  bool vanilla = false;
  std::vector<std::string> grid_clauses;
  std::vector<std::string> schedules;

  auto* flops = app.add_subcommand("flops", "Analytic op counts per layer and in total");
  add_model_flags(flops, f);
  flops->add_option("--out", f.out, "Write per-layer CSV here");
  flops->add_flag("--no-vomix", no_vomix, "Count the unmodified model");

  auto* init = app.add_subcommand("init-weights", "Write seeded weights as a VMTW file");
  add_model_flags(init, f);
  init->add_option("--seed", f.seed, "Generator seed");
  init->add_option("--out", f.out, "Output path")->required();

  auto* fwd = app.add_subcommand("forward", "Run one image through the model");
  add_model_flags(fwd, f);
  add_strategy_flags(fwd, f);
  fwd->add_option("--weights", f.weights, "VMTW weights (default: seeded init)");
  fwd->add_option("--image", f.image, "P6 PPM input (default: seeded synthetic image)");
  fwd->add_option("--seed", f.seed, "Seed for weights, synthetic input and random selection");
  fwd->add_flag("--trace", f.trace, "Print retained original-token indices per layer");
  fwd->add_flag("--vanilla", vanilla, "Use plain attention with no reduction");
  fwd->add_option("--out", f.out, "Logits file (default: stdout)");

  auto* bench = app.add_subcommand("bench", "Median wall-clock and op counts per schedule");
  add_model_flags(bench, f);
  add_strategy_flags(bench, f);
  bench->get_option("--schedule")->description("Schedule to benchmark; repeat for a sweep");
  bench->add_option("--sweep", schedules, "Schedules to sweep (repeatable)");
  bench->add_option("--repeats", repeats, "Timed runs (>= 5)");
  bench->add_option("--threads", threads, "Worker threads (default: VOMIX_THREADS or 1)");
  bench->add_option("--batch", batch, "Images per run");
  bench->add_option("--seed", f.seed, "Seed for weights and inputs");
  bench->add_option("--out", f.out, "CSV output (default: stdout)");

  auto add_render = [&](CLI::App* cmd) {
    add_model_flags(cmd, f);
    add_strategy_flags(cmd, f);
    cmd->add_option("--weights", f.weights, "VMTW weights (default: seeded init)");
    cmd->add_option("--image", f.image, "P6 PPM input (default: seeded synthetic image)");
    cmd->add_option("--seed", f.seed, "Seed for weights and synthetic input");
    cmd->add_option("--scale", scale, "Integer upscale factor");
    cmd->add_option("--frames", frames, "Temporal frames stacked in the patch grid");
    cmd->add_flag("--trace", f.trace, "Print retained original-token indices per layer");
    cmd->add_option("--out", f.out, "PPM output path")->required();
  };
  auto* heat = app.add_subcommand("heatmap", "Source heatmap of one surviving token");
  add_render(heat);
  heat->add_option("--token", token, "Index among the final surviving tokens");
  auto* region = app.add_subcommand("regionmap", "Colour each patch by its dominant surviving token");
  add_render(region);

  auto* ablate = app.add_subcommand("ablate", "Run a grid of strategy combinations");
  add_model_flags(ablate, f);
  ablate->add_option("--grid", grid_clauses,
                     "axis=v1,v2[;axis=...] over selection,fanout,feature,metric,query_mix,attn_mix (repeatable)");
  ablate->add_option("--weights", f.weights, "VMTW weights (default: seeded init)");
  ablate->add_option("--image", f.image, "P6 PPM input (default: seeded synthetic image)");
  ablate->add_option("--seed", f.seed, "Seed for weights, input and random selection");
  ablate->add_option("--out", f.out, "CSV output (default: stdout)");

  auto* selftest = app.add_subcommand("selftest", "Oracle, conservation and r=0 equivalence suites");
  selftest->add_option("--trials", trials, "Oracle trials");
  selftest->add_flag("--inject-tiebreak-fault", inject_fault)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*bench) {
      if (!f.schedule.empty()) schedules.insert(schedules.begin(), f.schedule);
    }
    if (*flops) return cmd_flops(f, no_vomix);
    if (*init) return cmd_init_weights(f);
    if (*fwd) return cmd_forward(f, vanilla);
    if (*bench) return cmd_bench(f, repeats, threads, batch, schedules);
    if (*heat) return cmd_heatmap(f, token, scale, frames);
    if (*region) return cmd_regionmap(f, scale, frames);
    if (*ablate) {
      std::string grid;
      for (const std::string& c : grid_clauses) grid += c + ";";
      if (grid.empty()) grid = "selection=vote,max_sim,random";
      return cmd_ablate(f, grid);
    }
    if (*selftest) return cmd_selftest(trials, inject_fault);
  } catch (const InvariantError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const Error& e) {
    std::cerr << "error (" << error_code_name(e.code()) << "): " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
