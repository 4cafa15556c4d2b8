#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace radhar {

enum class Errc {
  TruncatedHeader,
  NonPositiveParam,
  EmptyPayload,
  MalformedEntry,
  BadMagic,
  UnsupportedVersion,
  ShapeMismatch,
  LengthMismatch,
  InvalidCutoff,
  BankEmpty,
  RangeIntervalOutOfBounds,
  InvalidConfig,
  RangeWentNonpositive,
  LabelOutOfRange,
  TooFewSamples,
  Io,
};

constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::TruncatedHeader: return "TruncatedHeader";
    case Errc::NonPositiveParam: return "NonPositiveParam";
    case Errc::EmptyPayload: return "EmptyPayload";
    case Errc::MalformedEntry: return "MalformedEntry";
    case Errc::BadMagic: return "BadMagic";
    case Errc::UnsupportedVersion: return "UnsupportedVersion";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::InvalidCutoff: return "InvalidCutoff";
    case Errc::BankEmpty: return "BankEmpty";
    case Errc::RangeIntervalOutOfBounds: return "RangeIntervalOutOfBounds";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::RangeWentNonpositive: return "RangeWentNonpositive";
    case Errc::LabelOutOfRange: return "LabelOutOfRange";
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

/// Every recoverable failure in the library is reported as an Error carrying
/// a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline void require(bool ok, Errc code, const std::string& what) {
  if (!ok) throw Error(code, what);
}

}  // namespace radhar
