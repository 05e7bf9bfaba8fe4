#include "svp/error.hpp"

namespace svp {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SizeOutOfRange: return "SizeOutOfRange";
    case ErrorCode::UndefinedAtSize: return "UndefinedAtSize";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::EmptyPrediction: return "EmptyPrediction";
    case ErrorCode::NonPositiveG: return "NonPositiveG";
    case ErrorCode::NotNormalized: return "NotNormalized";
    case ErrorCode::UtilityNotSupported: return "UtilityNotSupported";
    case ErrorCode::ProviderExhaustedEarly: return "ProviderExhaustedEarly";
    case ErrorCode::NonMonotoneProvider: return "NonMonotoneProvider";
    case ErrorCode::UniverseTooLarge: return "UniverseTooLarge";
    case ErrorCode::UniverseMismatch: return "UniverseMismatch";
    case ErrorCode::ThetaOutOfRange: return "ThetaOutOfRange";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DegenerateData: return "DegenerateData";
    case ErrorCode::MissingNodeModel: return "MissingNodeModel";
    case ErrorCode::UnnormalizedNode: return "UnnormalizedNode";
    case ErrorCode::EmptyCalibration: return "EmptyCalibration";
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::MultipleRoots: return "MultipleRoots";
    case ErrorCode::UnmappedClass: return "UnmappedClass";
    case ErrorCode::UnaryInternalNode: return "UnaryInternalNode";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NonMonotoneIndices: return "NonMonotoneIndices";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigConflict: return "ConfigConflict";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
  }
  return "Unknown";
}

}  // namespace svp
