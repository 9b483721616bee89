#pragma once

#include <stdexcept>
#include <string>

namespace optw {

// Error taxonomy shared across the toolkit. Each condition the library can
// raise maps to one code so callers can branch without string matching.
enum class ErrorCode {
  InfeasibleMove,
  InfeasibleRoute,
  OracleCapExceeded,
  MalformedFile,
  UnknownFormat,
  SchemaVersionMismatch,
  NoAdmissibleNode,
  NonScalarLoss,
  ShapeError,
  DegenerateDurations,
  DegenerateBudget,
  DegenerateBaseline,
  EmptySample,
  TooFewPairs,
  CheckpointError,
  IoError,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::InfeasibleMove: return "InfeasibleMove";
    case ErrorCode::InfeasibleRoute: return "InfeasibleRoute";
    case ErrorCode::OracleCapExceeded: return "OracleCapExceeded";
    case ErrorCode::MalformedFile: return "MalformedFile";
    case ErrorCode::UnknownFormat: return "UnknownFormat";
    case ErrorCode::SchemaVersionMismatch: return "SchemaVersionMismatch";
    case ErrorCode::NoAdmissibleNode: return "NoAdmissibleNode";
    case ErrorCode::NonScalarLoss: return "NonScalarLoss";
    case ErrorCode::ShapeError: return "ShapeError";
    case ErrorCode::DegenerateDurations: return "DegenerateDurations";
    case ErrorCode::DegenerateBudget: return "DegenerateBudget";
    case ErrorCode::DegenerateBaseline: return "DegenerateBaseline";
    case ErrorCode::EmptySample: return "EmptySample";
    case ErrorCode::TooFewPairs: return "TooFewPairs";
    case ErrorCode::CheckpointError: return "CheckpointError";
    case ErrorCode::IoError: return "IoError";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

  // Optional context: line number for parse errors, step index for route
  // validation failures. -1 when not applicable.
  long detail = -1;

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message,
                               long detail = -1) {
  Error err(code, message);
  err.detail = detail;
  throw err;
}

}  // namespace optw
