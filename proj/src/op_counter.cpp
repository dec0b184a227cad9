#include "vomix/op_counter.hpp"

#include "vomix/errors.hpp"

namespace vomix {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig: return "configuration error";
    case ErrorCode::kInvariant: return "invariant violation";
    case ErrorCode::kBadMagic: return "bad magic";
    case ErrorCode::kUnsupportedVersion: return "unsupported version";
    case ErrorCode::kTruncated: return "truncated file";
    case ErrorCode::kShapeMismatch: return "shape mismatch";
    case ErrorCode::kIncompleteWeights: return "incomplete weight set";
    case ErrorCode::kIo: return "i/o error";
  }
  return "unknown error";
}

namespace ops {
namespace {
thread_local OpCounts t_counts;
}  // namespace

void add(OpCategory category, std::uint64_t n) {
  switch (category) {
    case OpCategory::kDense: t_counts.dense += n; break;
    case OpCategory::kOverhead: t_counts.overhead += n; break;
    case OpCategory::kElementwise: t_counts.elementwise += n; break;
  }
}

OpCounts snapshot() { return t_counts; }

void reset() { t_counts = OpCounts{}; }

}  // namespace ops
}  // namespace vomix
