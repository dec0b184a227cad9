#pragma once

#include <stdexcept>
#include <string>

namespace vomix {

enum class ErrorCode {
  kConfig,
  kInvariant,
  kBadMagic,
  kUnsupportedVersion,
  kTruncated,
  kShapeMismatch,
  kIncompleteWeights,
  kIo,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Invalid user-supplied configuration (shapes, ratios, enum names, ...).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCode::kConfig, what) {}
};

/// An internal invariant did not hold. Indicates a bug, not bad input.
class InvariantError : public Error {
 public:
  explicit InvariantError(const std::string& what) : Error(ErrorCode::kInvariant, what) {}
};

}  // namespace vomix
