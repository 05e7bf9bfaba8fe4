#pragma once

#include <stdexcept>
#include <string>

namespace svp {

enum class ErrorCode {
  // utility
  SizeOutOfRange,
  UndefinedAtSize,
  InvalidParams,
  EmptyPrediction,
  NonPositiveG,
  NotNormalized,
  UtilityNotSupported,
  // inference
  ProviderExhaustedEarly,
  NonMonotoneProvider,
  UniverseTooLarge,
  UniverseMismatch,
  ThetaOutOfRange,
  // models and data
  DimensionMismatch,
  EmptyInput,
  DegenerateData,
  MissingNodeModel,
  UnnormalizedNode,
  EmptyCalibration,
  // trees
  CycleDetected,
  MultipleRoots,
  UnmappedClass,
  UnaryInternalNode,
  // io
  ParseError,
  NonMonotoneIndices,
  FormatError,
  IoError,
  // harness
  ConfigConflict,
  InvariantViolation,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace svp
