#pragma once

#include <cstdint>

namespace vomix {

enum class OpCategory {
  kDense,        // projections, attention products, MLP, patch embed, head
  kOverhead,     // vote/mix specific pairwise work
  kElementwise,  // softmax exps, norms, GELU, scaling; excluded from headline totals
};

/// Per-thread multiply-accumulate tally, one op per fused multiply-add.
struct OpCounts {
  std::uint64_t dense = 0;
  std::uint64_t overhead = 0;
  std::uint64_t elementwise = 0;

  std::uint64_t headline() const { return dense + overhead; }

  OpCounts& operator+=(const OpCounts& o) {
    dense += o.dense;
    overhead += o.overhead;
    elementwise += o.elementwise;
    return *this;
  }
  friend OpCounts operator-(OpCounts a, const OpCounts& b) {
    a.dense -= b.dense;
    a.overhead -= b.overhead;
    a.elementwise -= b.elementwise;
    return a;
  }
  friend bool operator==(const OpCounts&, const OpCounts&) = default;
};

namespace ops {

void add(OpCategory category, std::uint64_t n);
OpCounts snapshot();
void reset();

}  // namespace ops

/// Captures the ops issued on the current thread during its lifetime.
class ScopedOpCount {
 public:
  ScopedOpCount() : start_(ops::snapshot()) {}
  OpCounts elapsed() const { return ops::snapshot() - start_; }

 private:
  OpCounts start_;
};

}  // namespace vomix
