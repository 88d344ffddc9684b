#pragma once

#include <stdexcept>
#include <string>

namespace raredyn {

enum class ErrorCode {
  NumericalBlowup,
  EmptyTrajectory,
  NonFiniteValue,
  MetricDegenerate,
  EmptySubset,
  NotIrreducible,
  PeriodicSpectrum,
  InvalidMeasure,
  Infeasible,
  NotMixing,
  SolveFailed,
  InvalidHorizon,
  TooLarge,
  Unsupported,
  ConfigError,
  InvalidArgument,
};

const char* to_string(ErrorCode code);

// Every failure in the library is reported through this type; the code lets
// callers (and the CLI exit-code mapping) distinguish categories.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NumericalBlowup: return "NumericalBlowup";
    case ErrorCode::EmptyTrajectory: return "EmptyTrajectory";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::MetricDegenerate: return "MetricDegenerate";
    case ErrorCode::EmptySubset: return "EmptySubset";
    case ErrorCode::NotIrreducible: return "NotIrreducible";
    case ErrorCode::PeriodicSpectrum: return "PeriodicSpectrum";
    case ErrorCode::InvalidMeasure: return "InvalidMeasure";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::NotMixing: return "NotMixing";
    case ErrorCode::SolveFailed: return "SolveFailed";
    case ErrorCode::InvalidHorizon: return "InvalidHorizon";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::Unsupported: return "Unsupported";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace raredyn
