#pragma once

#include <stdexcept>
#include <string>

namespace dlsim {

enum class ErrorCode {
  NonHermitianInput,
  DegenerateSpectrum,
  BandMatchingFailure,
  GridTooCoarse,
  MismatchedTime,
  LengthMismatch,
  UnknownKey,
  MissingRequired,
  UnitParseError,
  UnknownPreset,
  IoError,
  InvalidArgument,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonHermitianInput: return "NonHermitianInput";
    case ErrorCode::DegenerateSpectrum: return "DegenerateSpectrum";
    case ErrorCode::BandMatchingFailure: return "BandMatchingFailure";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::MismatchedTime: return "MismatchedTime";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::UnknownKey: return "UnknownKey";
    case ErrorCode::MissingRequired: return "MissingRequired";
    case ErrorCode::UnitParseError: return "UnitParseError";
    case ErrorCode::UnknownPreset: return "UnknownPreset";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Every failure raised by the library. The code is stable and testable;
/// the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dlsim
