#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "vomix/model.hpp"
#include "vomix/op_counter.hpp"

namespace vomix {

struct BenchOptions {
  std::string config_id = "custom";
  ViTConfig cfg;
  std::string schedule = "const:0:1";
  StrategyConfig strategy;
  Index batch = 1;
  Index repeats = 5;  // timed runs, at least 5
  Index warmup = 1;   // untimed runs before timing
  std::uint64_t seed = 0;
  Index threads = 1;
};

struct BenchResult {
  std::string config_id;
  std::string schedule;
  Index threads = 1;
  Index batch = 1;
  Index repeats = 0;
  double median_s = 0;  // wall time per batch
  double min_s = 0;
  double max_s = 0;
  double images_per_s = 0;
  double tokens_per_s = 0;
  OpCounts measured;     // per image, from the instrumented engine
  double predicted_ops = 0;  // analytic headline total per image
  std::uint64_t peak_memory_bytes = 0;  // estimate
};

/// Thread count from VOMIX_THREADS, else 1.
Index default_threads();

/// Times `repeats` forward passes of a synthetic batch seeded by `seed`.
/// Batch items are split across `threads` workers.
BenchResult run_bench(const BenchOptions& opts, const WeightStore& weights);
BenchResult run_bench(const BenchOptions& opts);

/// Estimated peak bytes: weights plus the largest per-layer working set per thread.
std::uint64_t estimate_peak_memory(const ViTConfig& cfg, const PruneSchedule& sched, Index threads);

void write_bench_csv_header(std::ostream& out);
void write_bench_csv_row(std::ostream& out, const BenchResult& r);

/// One benchmark per schedule, written as CSV (header always present).
std::vector<BenchResult> sweep(const BenchOptions& base, const std::vector<std::string>& schedules,
                               std::ostream& out);

}  // namespace vomix
