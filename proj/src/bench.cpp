#include "vomix/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <iomanip>
#include <thread>

#include "vomix/flops.hpp"

namespace vomix {

Index default_threads() {
  if (const char* env = std::getenv("VOMIX_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*env != '\0' && *end == '\0' && v > 0) return static_cast<Index>(v);
  }
  return 1;
}

std::uint64_t estimate_peak_memory(const ViTConfig& cfg, const PruneSchedule& sched, Index threads) {
  std::uint64_t weight_values = 0;
  for (const ManifestEntry& e : manifest(cfg)) {
    std::uint64_t n = 1;
    for (auto d : e.dims) n *= d;
    weight_values += n;
  }
  const auto traj = token_trajectory(cfg.tokens(), sched, cfg.class_token ? 1 : 0);
  const auto d = static_cast<std::uint64_t>(cfg.dim);
  const auto hidden = static_cast<std::uint64_t>(cfg.mlp_hidden());
  std::uint64_t peak = 0;
  for (std::size_t l = 0; l + 1 < traj.size(); ++l) {
    const auto n = static_cast<std::uint64_t>(traj[l]);
    const auto m = static_cast<std::uint64_t>(traj[l + 1]);
    // x, normed, qkv, similarity, one head's logits + probabilities, mlp hidden
    const std::uint64_t live = n * d * 2 + n * 3 * d + n * n + 2 * m * n + m * hidden;
    peak = std::max(peak, live);
  }
  return 4 * (weight_values + peak * static_cast<std::uint64_t>(std::max<Index>(threads, 1)));
}

BenchResult run_bench(const BenchOptions& opts, const WeightStore& weights) {
  if (opts.repeats < 5) throw ConfigError("bench needs at least 5 repeats, got " + std::to_string(opts.repeats));
  if (opts.batch < 1) throw ConfigError("batch must be at least 1");
  const Index threads = std::clamp<Index>(opts.threads, 1, opts.batch);

  ForwardOptions fwd;
  fwd.schedule = expand_schedule(opts.schedule, static_cast<std::size_t>(opts.cfg.depth));
  fwd.strategy = opts.strategy;

  std::vector<ImageTensor> inputs;
  for (Index b = 0; b < opts.batch; ++b) {
    inputs.push_back(synthetic_image(opts.cfg.channels, opts.cfg.image_size, opts.seed + static_cast<std::uint64_t>(b)));
  }

  auto run_batch = [&]() {
    std::vector<OpCounts> per_thread(static_cast<std::size_t>(threads));
    auto work = [&](Index t) {
      ScopedOpCount count;
      for (Index b = t; b < opts.batch; b += threads) {
        forward(inputs[static_cast<std::size_t>(b)], weights, opts.cfg, fwd);
      }
      per_thread[static_cast<std::size_t>(t)] = count.elapsed();
    };
    if (threads == 1) {
      work(0);
    } else {
      std::vector<std::jthread> pool;
      for (Index t = 0; t < threads; ++t) pool.emplace_back(work, t);
    }
    OpCounts total;
    for (const OpCounts& c : per_thread) total += c;
    return total;
  };

  for (Index i = 0; i < opts.warmup; ++i) run_batch();

  std::vector<double> times;
  OpCounts counts;
  for (Index i = 0; i < opts.repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    counts = run_batch();
    const auto t1 = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  std::vector<double> sorted = times;
  std::sort(sorted.begin(), sorted.end());

  BenchResult r;
  r.config_id = opts.config_id;
  r.schedule = opts.schedule;
  r.threads = threads;
  r.batch = opts.batch;
  r.repeats = opts.repeats;
  r.median_s = sorted[sorted.size() / 2];
  r.min_s = sorted.front();
  r.max_s = sorted.back();
  r.images_per_s = static_cast<double>(opts.batch) / r.median_s;
  r.tokens_per_s = r.images_per_s * static_cast<double>(opts.cfg.tokens());
  const auto batch = static_cast<std::uint64_t>(opts.batch);
  r.measured = {counts.dense / batch, counts.overhead / batch, counts.elementwise / batch};
  r.predicted_ops = model_flops(opts.cfg, fwd.schedule, true).total;
  r.peak_memory_bytes = estimate_peak_memory(opts.cfg, fwd.schedule, threads);
  return r;
}

BenchResult run_bench(const BenchOptions& opts) {
  return run_bench(opts, init_weights(opts.cfg, opts.seed));
}

void write_bench_csv_header(std::ostream& out) {
  out << "config,schedule,threads,batch,repeats,median_s,min_s,max_s,images_per_s,tokens_per_s,"
         "measured_ops,measured_overhead_ops,measured_elementwise_ops,predicted_ops,peak_memory_bytes\n";
}

void write_bench_csv_row(std::ostream& out, const BenchResult& r) {
  out << std::setprecision(10) << r.config_id << ",\"" << r.schedule << "\"," << r.threads << ','
      << r.batch << ',' << r.repeats << ',' << r.median_s << ',' << r.min_s << ',' << r.max_s << ','
      << r.images_per_s << ',' << r.tokens_per_s << ',' << r.measured.headline() << ','
      << r.measured.overhead << ',' << r.measured.elementwise << ',' << std::setprecision(17)
      << r.predicted_ops << ',' << r.peak_memory_bytes << '\n';
}

std::vector<BenchResult> sweep(const BenchOptions& base, const std::vector<std::string>& schedules,
                               std::ostream& out) {
  write_bench_csv_header(out);
  std::vector<BenchResult> results;
  if (schedules.empty()) return results;
  const WeightStore weights = init_weights(base.cfg, base.seed);
  for (const std::string& s : schedules) {
    BenchOptions opts = base;
    opts.schedule = s;
    results.push_back(run_bench(opts, weights));
    write_bench_csv_row(out, results.back());
  }
  return results;
}

}  // namespace vomix
