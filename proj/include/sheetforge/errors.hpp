#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sheetforge {

enum class ErrorCode {
  OutOfRange,
  InvalidModel,
  DegenerateAngle,
  QuadratureFailure,
  NodeNotOnLattice,
  PointNotOnEvalGrid,
  ProfileViolation,
  InsufficientReplicates,
  UncoupledInputs,
  NumericFailure,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries a machine-readable code so the
// CLI can emit it verbatim in its error JSON.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace sheetforge
