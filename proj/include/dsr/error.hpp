#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dsr {

enum class ErrorCode {
  // configuration
  InvalidArgument,
  // data ingestion
  FileNotFound,
  BadMagic,
  CountMismatch,
  TruncatedFile,
  RaggedRows,
  NonNumericFeature,
  SingleClass,
  InsufficientSamples,
  ZeroColumn,
  // numerics
  DimensionMismatch,
  SingularSystem,
  AllScoresInfinite,
  InvalidAtomCount,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// True for errors caused by bad user configuration rather than bad data
  /// or a numerical failure.
  bool is_config_error() const noexcept {
    return code_ == ErrorCode::InvalidArgument;
  }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::RaggedRows: return "RaggedRows";
    case ErrorCode::NonNumericFeature: return "NonNumericFeature";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::ZeroColumn: return "ZeroColumn";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::AllScoresInfinite: return "AllScoresInfinite";
    case ErrorCode::InvalidAtomCount: return "InvalidAtomCount";
  }
  return "Unknown";
}

}  // namespace dsr
