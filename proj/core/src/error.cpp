#include "flowguard/error.hpp"

namespace flowguard {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedHeader: return "TruncatedHeader";
    case ErrorCode::TruncatedRecord: return "TruncatedRecord";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::EmptySegment: return "EmptySegment";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::SingleCluster: return "SingleCluster";
    case ErrorCode::DegenerateClustering: return "DegenerateClustering";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::AllNoise: return "AllNoise";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::AllCandidatesFailed: return "AllCandidatesFailed";
    case ErrorCode::CurveTooShort: return "CurveTooShort";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::InvalidScenario: return "InvalidScenario";
    case ErrorCode::UnwritablePath: return "UnwritablePath";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace flowguard
