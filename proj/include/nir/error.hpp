#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nir {

enum class ErrorCode {
  invalid_argument,
  invalid_graph,
  shape_mismatch,
  shape_conflict,
  unknown_node,
  parse_error,
  version_error,
  non_ode_kind,
  numeric_overflow,
  division_by_zero,
  unsatisfiable_constraint,
  cycle_without_state,
  length_mismatch,
  incompatible,
  io_error,
};

constexpr std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::invalid_graph: return "InvalidGraph";
    case ErrorCode::shape_mismatch: return "ShapeMismatch";
    case ErrorCode::shape_conflict: return "ShapeConflict";
    case ErrorCode::unknown_node: return "UnknownNode";
    case ErrorCode::parse_error: return "ParseError";
    case ErrorCode::version_error: return "VersionError";
    case ErrorCode::non_ode_kind: return "NonODEKind";
    case ErrorCode::numeric_overflow: return "NumericOverflow";
    case ErrorCode::division_by_zero: return "DivisionByZero";
    case ErrorCode::unsatisfiable_constraint: return "UnsatisfiableConstraint";
    case ErrorCode::cycle_without_state: return "CycleWithoutState";
    case ErrorCode::length_mismatch: return "LengthMismatch";
    case ErrorCode::incompatible: return "Incompatible";
    case ErrorCode::io_error: return "IOError";
  }
  return "Error";
}

// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace nir
