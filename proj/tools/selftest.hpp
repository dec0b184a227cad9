#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace vomix {

struct SuiteReport {
  std::string name;
  int trials = 0;
  int failures = 0;
  std::string detail;  // first failure, if any
};

struct SelftestReport {
  std::vector<SuiteReport> suites;
  bool passed() const;
};

struct SelftestOptions {
  int trials = 200;
  /// Flips lowest-index tie-breaking for the duration of the run.
  bool inject_tiebreak_fault = false;
};

/// Tie-break contract, oracle equivalence, conservation and r = 0
/// equivalence suites.
SelftestReport run_selftest(const SelftestOptions& opts);

void print_report(std::ostream& out, const SelftestReport& report);

}  // namespace vomix
