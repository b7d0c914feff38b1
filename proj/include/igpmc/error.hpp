#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace igpmc {

enum class ErrorCode {
  kDimensionMismatch,
  kEmptyInput,
  kNotPositiveDefinite,
  kZeroBandwidth,
  kDegenerateInputs,
  kNumericalBreakdown,
  kTooFewPoints,
  kTooFewSamples,
  kForwardModelFailure,
  kBudgetExhausted,
  kDegenerateResiduals,
  kNonPositiveVariance,
  kNonFiniteForcing,
  kSolverDiverged,
  kCflViolation,
  kInvalidConfig,
  kIncompatibleResults,
  kIoError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace igpmc
