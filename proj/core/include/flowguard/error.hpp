#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace flowguard {

enum class ErrorCode {
  // capture-ingest
  BadMagic,
  TruncatedHeader,
  TruncatedRecord,
  UnsupportedFormat,
  IoError,
  // flowmetrics / preprocess
  EmptySegment,
  EmptyMatrix,
  NonFiniteInput,
  DimensionMismatch,
  // clustering
  EmptyInput,
  TooFewPoints,
  SingleCluster,
  DegenerateClustering,
  KTooLarge,
  InvalidArgument,
  // detector
  AllNoise,
  VersionMismatch,
  CorruptFile,
  // tuning
  AllCandidatesFailed,
  CurveTooShort,
  // evaluation
  LengthMismatch,
  // synthgen
  InvalidScenario,
  UnwritablePath,
  // file formats
  ParseError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception carrying a machine-readable error code alongside the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace flowguard
