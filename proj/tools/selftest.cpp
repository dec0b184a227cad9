#include "selftest.hpp"

#include <cmath>
#include <sstream>

#include "random_inputs.hpp"
#include "vomix/model.hpp"
#include "vomix/provenance.hpp"

namespace vomix {
namespace {

class Suite {
 public:
  explicit Suite(std::string name) { report_.name = std::move(name); }

  void check(bool ok, const std::string& what) {
    ++report_.trials;
    if (!ok) {
      if (report_.failures == 0) report_.detail = what;
      ++report_.failures;
    }
  }
  SuiteReport take() { return std::move(report_); }

 private:
  SuiteReport report_;
};

SuiteReport tie_break_suite() {
  Suite suite("tie-break");
  MatrixF a = MatrixF::Constant(5, 5, 0.5f);
  a.diagonal().setConstant(neg_inf<float>());
  const auto votes = vote_scores(a);
  bool lowest = votes.target[0] == 1;
  for (std::size_t i = 1; i < votes.target.size(); ++i) lowest = lowest && votes.target[i] == 0;
  suite.check(lowest, "equal similarities must vote for the lowest non-self index");

  const IndexVector order = argsort_desc(VectorF::Constant(4, 1.0f));
  suite.check(order == IndexVector{0, 1, 2, 3}, "argsort_desc must keep index order on ties");

  const Partition part = select_tokens(VectorF::Zero(5).eval(), 0.4);
  suite.check(part.pruned == IndexVector{0, 1}, "equal scores must prune the lowest indices first");
  return suite.take();
}

SuiteReport oracle_suite(int trials) {
  Suite suite("oracle-equivalence");
  for (int i = 0; i < trials; ++i) {
    const auto t = reference::run_oracle_trial(0x5e1f7e57ULL + static_cast<std::uint64_t>(i));
    std::ostringstream what;
    what << "seed " << t.seed << " " << t.strategy.label() << " N=" << t.tokens << " r=" << t.ratio
         << (t.partition_match ? " output diff " + std::to_string(t.max_abs_diff) : " partition mismatch");
    suite.check(t.partition_match && t.max_abs_diff <= 1e-6 && t.max_size_diff <= 1e-6, what.str());
  }
  return suite.take();
}

ViTConfig small_config(SplitMix64& rng) {
  ViTConfig cfg;
  cfg.image_size = 16 * (2 + static_cast<Index>(rng.next() % 3));
  cfg.patch_size = 8;
  cfg.depth = 3;
  cfg.dim = 32;
  cfg.heads = 4;
  cfg.classes = 5;
  cfg.class_token = rng.next() % 2 == 0;
  return cfg;
}

SuiteReport conservation_suite(int trials) {
  Suite suite("conservation");
  for (int i = 0; i < trials; ++i) {
    SplitMix64 rng(0xc0de0000ULL + static_cast<std::uint64_t>(i));
    const ViTConfig cfg = small_config(rng);
    const WeightStore w = init_weights(cfg, rng.next());
    ForwardOptions opts;
    opts.schedule = PruneSchedule::zeros(static_cast<std::size_t>(cfg.depth));
    for (double& r : opts.schedule.ratios) r = rng.uniform(0.0, 0.5);
    opts.strategy.query_mix = rng.next() % 2 == 0 ? QueryMix::kGlobal : QueryMix::kMax;
    const auto image = synthetic_image(cfg.channels, cfg.image_size, rng.next());
    const auto result = forward(image, w, cfg, opts);

    const double n0 = static_cast<double>(cfg.tokens());
    ProvenanceTracker tracker(cfg.tokens());
    bool ok = true;
    std::string what;
    for (const auto& trace : result.traces) {
      if (std::abs(trace.sizes_after.cast<double>().sum() - n0) > 1e-4 * n0) {
        ok = false;
        what = "size sum drifted at layer " + std::to_string(trace.layer);
      }
      for (Index j = 0; j < trace.weights.rows(); ++j) {
        if (std::abs(trace.weights.row(j).cast<double>().sum() - 1.0) > 1e-6 || trace.weights.row(j).minCoeff() < 0) {
          ok = false;
          what = "mixture weight row not stochastic at layer " + std::to_string(trace.layer);
        }
      }
      tracker.update(trace);
      const AssignmentMatrix& m = tracker.assignment();
      if (((m.colwise().sum().array() - 1.0).abs() > 1e-5).any()) {
        ok = false;
        what = "assignment column sum drifted at layer " + std::to_string(trace.layer);
      }
      const VectorD mass = provenance_mass(m, trace.sizes_after.cast<double>());
      if (((mass.array() - 1.0).abs() > 1e-4).any()) {
        ok = false;
        what = "provenance mass drifted at layer " + std::to_string(trace.layer);
      }
    }
    suite.check(ok, "trial " + std::to_string(i) + ": " + what);
  }
  return suite.take();
}

SuiteReport r0_suite(int trials) {
  Suite suite("r0-equivalence");
  for (int i = 0; i < trials; ++i) {
    SplitMix64 rng(0x2e40ULL + static_cast<std::uint64_t>(i));
    const ViTConfig cfg = small_config(rng);
    const WeightStore w = init_weights(cfg, rng.next());
    const auto image = synthetic_image(cfg.channels, cfg.image_size, rng.next());
    ForwardOptions opts;
    opts.schedule = PruneSchedule::zeros(static_cast<std::size_t>(cfg.depth));
    const VectorF reduced = forward(image, w, cfg, opts).logits;
    const VectorF vanilla = forward_vanilla(image, w, cfg);
    const double diff = (reduced - vanilla).cwiseAbs().maxCoeff();
    suite.check(diff <= 1e-5, "trial " + std::to_string(i) + ": logit diff " + std::to_string(diff));
  }
  return suite.take();
}

}  // namespace

bool SelftestReport::passed() const {
  for (const SuiteReport& s : suites) {
    if (s.failures > 0) return false;
  }
  return !suites.empty();
}

SelftestReport run_selftest(const SelftestOptions& opts) {
  struct FaultGuard {
    explicit FaultGuard(bool on) { detail::tie_break_fault() = on; }
    ~FaultGuard() { detail::tie_break_fault() = false; }
  } guard(opts.inject_tiebreak_fault);

  SelftestReport report;
  report.suites.push_back(tie_break_suite());
  report.suites.push_back(oracle_suite(opts.trials));
  report.suites.push_back(conservation_suite(std::max(1, opts.trials / 10)));
  report.suites.push_back(r0_suite(std::max(1, opts.trials / 20)));
  return report;
}

void print_report(std::ostream& out, const SelftestReport& report) {
  for (const SuiteReport& s : report.suites) {
    out << (s.failures == 0 ? "PASS " : "FAIL ") << s.name << ": " << s.trials - s.failures << "/"
        << s.trials << " trials passed";
    if (s.failures > 0) out << " (first failure: " << s.detail << ")";
    out << '\n';
  }
  out << (report.passed() ? "selftest passed" : "selftest FAILED") << '\n';
}

}  // namespace vomix
