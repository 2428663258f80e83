#pragma once

#include <stdexcept>
#include <string>

namespace dagreg {

enum class ErrorKind {
  NotPositiveDefinite,
  SingularBlock,
  InvalidShape,
  CapExceeded,
  RankDeficient,
  DegenerateVariance,
  EmptyChain,
  UndefinedEstimator,
  CountTooLarge,
  ZeroReference,
  TooShort,
  Validation,
  Io,
};

const char* to_string(ErrorKind kind);

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::SingularBlock: return "SingularBlock";
    case ErrorKind::InvalidShape: return "InvalidShape";
    case ErrorKind::CapExceeded: return "CapExceeded";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::DegenerateVariance: return "DegenerateVariance";
    case ErrorKind::EmptyChain: return "EmptyChain";
    case ErrorKind::UndefinedEstimator: return "UndefinedEstimator";
    case ErrorKind::CountTooLarge: return "CountTooLarge";
    case ErrorKind::ZeroReference: return "ZeroReference";
    case ErrorKind::TooShort: return "TooShort";
    case ErrorKind::Validation: return "Validation";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace dagreg
