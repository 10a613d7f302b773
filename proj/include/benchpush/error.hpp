#pragma once

#include <stdexcept>
#include <string>

namespace benchpush {

enum class ErrorKind {
  InvalidSpec,
  InvalidShape,
  PlacementFailure,
  SolverDivergence,
  WrongActionMode,
  StepAfterTermination,
  StartInObstacle,
  Unreachable,
  CorruptTrace,
  NoPathFound,
  InvalidLog,
  Io,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidSpec: return "invalid-spec";
    case ErrorKind::InvalidShape: return "invalid-shape";
    case ErrorKind::PlacementFailure: return "placement-failure";
    case ErrorKind::SolverDivergence: return "solver-divergence";
    case ErrorKind::WrongActionMode: return "wrong-action-mode";
    case ErrorKind::StepAfterTermination: return "step-after-termination";
    case ErrorKind::StartInObstacle: return "start-in-obstacle";
    case ErrorKind::Unreachable: return "unreachable";
    case ErrorKind::CorruptTrace: return "corrupt-trace";
    case ErrorKind::NoPathFound: return "no-path-found";
    case ErrorKind::InvalidLog: return "invalid-log";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace benchpush
