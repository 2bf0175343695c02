#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace topostruct {

enum class Errc {
  MalformedHeader,
  UnsupportedDepth,
  TruncatedPayload,
  MalformedMask,
  IoFailure,
  EmptyField,
  OutOfBounds,
  NotASaddle,
  EmptyThetaList,
  TooManyBranches,
  DegenerateSigma,
  DimensionMismatch,
  TooFewSamples,
  EmptyForeground,
  PatchTooLarge,
  UnknownBranch,
  NoOpDecision,
  InvalidLevels,
  InvalidParams,
  InvalidConfig,
};

inline const char* to_string(Errc code) {
  switch (code) {
    case Errc::MalformedHeader: return "MalformedHeader";
    case Errc::UnsupportedDepth: return "UnsupportedDepth";
    case Errc::TruncatedPayload: return "TruncatedPayload";
    case Errc::MalformedMask: return "MalformedMask";
    case Errc::IoFailure: return "IoFailure";
    case Errc::EmptyField: return "EmptyField";
    case Errc::OutOfBounds: return "OutOfBounds";
    case Errc::NotASaddle: return "NotASaddle";
    case Errc::EmptyThetaList: return "EmptyThetaList";
    case Errc::TooManyBranches: return "TooManyBranches";
    case Errc::DegenerateSigma: return "DegenerateSigma";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::EmptyForeground: return "EmptyForeground";
    case Errc::PatchTooLarge: return "PatchTooLarge";
    case Errc::UnknownBranch: return "UnknownBranch";
    case Errc::NoOpDecision: return "NoOpDecision";
    case Errc::InvalidLevels: return "InvalidLevels";
    case Errc::InvalidParams: return "InvalidParams";
    case Errc::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can report it in machine-readable form.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace topostruct
