#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace soblab {

enum class ErrorKind {
  TooFewPoints,
  DuplicatePoints,
  MismatchedLengths,
  KissingUndefined,
  InvalidParams,
  UnsupportedOrder,
  NonpositiveRadius,
  QuadratureNotConverged,
  UnknownMultiIndex,
  InvalidShrink,
  ParamsMismatch,
  NotInterpolating,
  RejectionBudgetExceeded,
  OutOfDomain,
  UnsupportedNu,
  SolveFailed,
  UnsupportedSpec,
  InvalidRange,
  InvalidBeta,
  UnsupportedExactVariant,
  ConfigInvalid,
  ParseError,
  Io,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::TooFewPoints: return "TooFewPoints";
    case ErrorKind::DuplicatePoints: return "DuplicatePoints";
    case ErrorKind::MismatchedLengths: return "MismatchedLengths";
    case ErrorKind::KissingUndefined: return "KissingUndefined";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::UnsupportedOrder: return "UnsupportedOrder";
    case ErrorKind::NonpositiveRadius: return "NonpositiveRadius";
    case ErrorKind::QuadratureNotConverged: return "QuadratureNotConverged";
    case ErrorKind::UnknownMultiIndex: return "UnknownMultiIndex";
    case ErrorKind::InvalidShrink: return "InvalidShrink";
    case ErrorKind::ParamsMismatch: return "ParamsMismatch";
    case ErrorKind::NotInterpolating: return "NotInterpolating";
    case ErrorKind::RejectionBudgetExceeded: return "RejectionBudgetExceeded";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::UnsupportedNu: return "UnsupportedNu";
    case ErrorKind::SolveFailed: return "SolveFailed";
    case ErrorKind::UnsupportedSpec: return "UnsupportedSpec";
    case ErrorKind::InvalidRange: return "InvalidRange";
    case ErrorKind::InvalidBeta: return "InvalidBeta";
    case ErrorKind::UnsupportedExactVariant: return "UnsupportedExactVariant";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a kind so callers (and the CLI's
/// exit-code mapping) can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace soblab
