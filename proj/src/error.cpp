#include "orthotail/error.hpp"

namespace orthotail {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kDimensionZero: return "DimensionZero";
    case ErrorCode::kAsymmetric: return "Asymmetric";
    case ErrorCode::kNoConvergence: return "NoConvergence";
    case ErrorCode::kEmptyMatrix: return "EmptyMatrix";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNegativeDistance: return "NegativeDistance";
    case ErrorCode::kNonAscending: return "NonAscending";
    case ErrorCode::kEmptyBatch: return "EmptyBatch";
    case ErrorCode::kEmptyAccumulator: return "EmptyAccumulator";
    case ErrorCode::kEmptyCounts: return "EmptyCounts";
    case ErrorCode::kNegativeMu: return "NegativeMu";
    case ErrorCode::kConfigInvalid: return "ConfigInvalid";
    case ErrorCode::kNonFiniteActivation: return "NonFiniteActivation";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kLabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kMissingClass: return "MissingClass";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kEmpty: return "Empty";
    case ErrorCode::kInvalidIF: return "InvalidIF";
    case ErrorCode::kTooFewSamples: return "TooFewSamples";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kCountMismatch: return "CountMismatch";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

}  // namespace orthotail
