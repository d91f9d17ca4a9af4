#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace orthotail {

enum class ErrorCode {
  kNonFinite,
  kDimensionZero,
  kAsymmetric,
  kNoConvergence,
  kEmptyMatrix,
  kDimensionMismatch,
  kNegativeDistance,
  kNonAscending,
  kEmptyBatch,
  kEmptyAccumulator,
  kEmptyCounts,
  kNegativeMu,
  kConfigInvalid,
  kNonFiniteActivation,
  kNonFiniteLoss,
  kLabelOutOfRange,
  kShapeMismatch,
  kMissingClass,
  kLengthMismatch,
  kEmpty,
  kInvalidIF,
  kTooFewSamples,
  kBadMagic,
  kTruncatedFile,
  kCountMismatch,
  kIo,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception carrying a machine-checkable error code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace orthotail
