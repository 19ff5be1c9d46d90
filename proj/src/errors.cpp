#include "sheetforge/errors.hpp"

namespace sheetforge {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::DegenerateAngle: return "DegenerateAngle";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::NodeNotOnLattice: return "NodeNotOnLattice";
    case ErrorCode::PointNotOnEvalGrid: return "PointNotOnEvalGrid";
    case ErrorCode::ProfileViolation: return "ProfileViolation";
    case ErrorCode::InsufficientReplicates: return "InsufficientReplicates";
    case ErrorCode::UncoupledInputs: return "UncoupledInputs";
    case ErrorCode::NumericFailure: return "NumericFailure";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace sheetforge
