#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cutoff {

enum class ErrorCode {
  EmptySequence,
  SumMismatch,
  ZeroDegree,
  DegenerateMu,
  DegenerateDelta,
  KOutOfRange,
  InvalidEnvironment,
  ContextMismatch,
  NotStronglyConnected,
  NoConvergence,
  RhoOne,
  DegenerateWindow,
  ExplosionGuard,
  TooManyWeights,
  InvalidArgument,
  Parse,
  Io,
  ConfigError,
  ResampleCapExceeded,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::SumMismatch: return "SumMismatch";
    case ErrorCode::ZeroDegree: return "ZeroDegree";
    case ErrorCode::DegenerateMu: return "DegenerateMu";
    case ErrorCode::DegenerateDelta: return "DegenerateDelta";
    case ErrorCode::KOutOfRange: return "KOutOfRange";
    case ErrorCode::InvalidEnvironment: return "InvalidEnvironment";
    case ErrorCode::ContextMismatch: return "ContextMismatch";
    case ErrorCode::NotStronglyConnected: return "NotStronglyConnected";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::RhoOne: return "RhoOne";
    case ErrorCode::DegenerateWindow: return "DegenerateWindow";
    case ErrorCode::ExplosionGuard: return "ExplosionGuard";
    case ErrorCode::TooManyWeights: return "TooManyWeights";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::Io: return "Io";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::ResampleCapExceeded: return "ResampleCapExceeded";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above, so
/// callers (the CLI in particular) can map failures to exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace cutoff
