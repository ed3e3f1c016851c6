#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace iccwork {

enum class ErrorKind {
  InvalidArgument,
  ImaginaryFrequency,
  SoftModeSingular,
  PhaseMismatch,
  AtCriticality,
  CutoffTooLoose,
  NoConvergence,
  LocalSolverFailure,
  DimensionTooLarge,
  BasisMismatch,
  NotStationary,
  NegativeCurvature,
  EdgePeak,
  TooFewPoints,
  DegenerateFit,
  NoOverlap,
  NonPositiveData,
  SchemaError,
  ConfigError,
  IoError,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ImaginaryFrequency: return "ImaginaryFrequency";
    case ErrorKind::SoftModeSingular: return "SoftModeSingular";
    case ErrorKind::PhaseMismatch: return "PhaseMismatch";
    case ErrorKind::AtCriticality: return "AtCriticality";
    case ErrorKind::CutoffTooLoose: return "CutoffTooLoose";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::LocalSolverFailure: return "LocalSolverFailure";
    case ErrorKind::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorKind::BasisMismatch: return "BasisMismatch";
    case ErrorKind::NotStationary: return "NotStationary";
    case ErrorKind::NegativeCurvature: return "NegativeCurvature";
    case ErrorKind::EdgePeak: return "EdgePeak";
    case ErrorKind::TooFewPoints: return "TooFewPoints";
    case ErrorKind::DegenerateFit: return "DegenerateFit";
    case ErrorKind::NoOverlap: return "NoOverlap";
    case ErrorKind::NonPositiveData: return "NonPositiveData";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

/// Exception carrying a machine-checkable error category.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace iccwork
