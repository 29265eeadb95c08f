#pragma once

#include <stdexcept>
#include <string>

namespace oedkit {

enum class ErrorKind {
  NonFinite,
  IndexOutOfRange,
  DimensionMismatch,
  SingularFIM,
  NonPositiveDeterminant,
  RepeatedExtremeEigenvalue,
  SimulationFailure,
  RecycleNotConverged,
  NegativeState,
  NotConverged,
  AllStartsFailed,
  NonPositiveSubmatrix,
  InvalidArgument,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::SingularFIM: return "SingularFIM";
    case ErrorKind::NonPositiveDeterminant: return "NonPositiveDeterminant";
    case ErrorKind::RepeatedExtremeEigenvalue: return "RepeatedExtremeEigenvalue";
    case ErrorKind::SimulationFailure: return "SimulationFailure";
    case ErrorKind::RecycleNotConverged: return "RecycleNotConverged";
    case ErrorKind::NegativeState: return "NegativeState";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::AllStartsFailed: return "AllStartsFailed";
    case ErrorKind::NonPositiveSubmatrix: return "NonPositiveSubmatrix";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  // numerical failures map to CLI exit 3, everything else to exit 2
  bool numerical() const noexcept {
    switch (kind_) {
      case ErrorKind::IndexOutOfRange:
      case ErrorKind::DimensionMismatch:
      case ErrorKind::InvalidArgument:
        return false;
      default:
        return true;
    }
  }

 private:
  ErrorKind kind_;
};

}  // namespace oedkit
