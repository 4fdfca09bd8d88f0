#pragma once

#include <stdexcept>
#include <string>

namespace hyperinv {

enum class ErrorCode {
  kInvalidMesh,
  kConstraintViolation,
  kDirectionShape,
  kSymmetryViolation,
  kResolution,
  kSolverFailure,
  kInsufficientRegularity,
  kPrecondition,
  kObservationSpec,
  kSpecMismatch,
  kUnsupportedObservation,
  kRequiresForwardSolve,
  kDegenerateTest,
  kSpectral,
  kSlack,
  kTooLarge,
  kStepSize,
  kCgBreakdown,
  kConfig,
  kIo,
};

const char* to_string(ErrorCode code);

/// Single exception type for the library; `code()` lets callers dispatch.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hyperinv
