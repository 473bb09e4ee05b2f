#pragma once

#include <stdexcept>
#include <string>

namespace dpx {

// Domain error categories surfaced by the library.  The CLI maps DomainError
// to exit code 1 and IoError to exit code 2; everything else is a bug.
enum class ErrorKind {
  InvalidMatrix,
  SingularMatrix,
  NotPositiveDefinite,
  DegenerateColumn,
  DegenerateMatrix,
  DimensionMismatch,
  Infeasible,
  NoConvergence,
  OutOfRegion,
  NumericalBreakdown,
  StepTooLarge,
  InvalidSpec,
  SingularSample,
  Diverged,
  InvalidMethodForMatrix,
  LineSearchStall,
  HypothesisFailed,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidMatrix: return "InvalidMatrix";
    case ErrorKind::SingularMatrix: return "SingularMatrix";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::DegenerateColumn: return "DegenerateColumn";
    case ErrorKind::DegenerateMatrix: return "DegenerateMatrix";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::OutOfRegion: return "OutOfRegion";
    case ErrorKind::NumericalBreakdown: return "NumericalBreakdown";
    case ErrorKind::StepTooLarge: return "StepTooLarge";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::SingularSample: return "SingularSample";
    case ErrorKind::Diverged: return "Diverged";
    case ErrorKind::InvalidMethodForMatrix: return "InvalidMethodForMatrix";
    case ErrorKind::LineSearchStall: return "LineSearchStall";
    case ErrorKind::HypothesisFailed: return "HypothesisFailed";
  }
  return "Unknown";
}

class DomainError : public std::runtime_error {
 public:
  DomainError(ErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + ": " + detail),
        kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// File/parse failures (missing file, malformed matrix text, bad CSV).
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace dpx
