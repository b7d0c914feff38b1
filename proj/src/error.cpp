#include "igpmc/error.hpp"

namespace igpmc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kNotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::kZeroBandwidth: return "ZeroBandwidth";
    case ErrorCode::kDegenerateInputs: return "DegenerateInputs";
    case ErrorCode::kNumericalBreakdown: return "NumericalBreakdown";
    case ErrorCode::kTooFewPoints: return "TooFewPoints";
    case ErrorCode::kTooFewSamples: return "TooFewSamples";
    case ErrorCode::kForwardModelFailure: return "ForwardModelFailure";
    case ErrorCode::kBudgetExhausted: return "BudgetExhausted";
    case ErrorCode::kDegenerateResiduals: return "DegenerateResiduals";
    case ErrorCode::kNonPositiveVariance: return "NonPositiveVariance";
    case ErrorCode::kNonFiniteForcing: return "NonFiniteForcing";
    case ErrorCode::kSolverDiverged: return "SolverDiverged";
    case ErrorCode::kCflViolation: return "CflViolation";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kIncompatibleResults: return "IncompatibleResults";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace igpmc
