#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace glancelab {

enum class ErrorCode {
  kMalformedRecord,
  kUnsortedTimestamps,
  kEmptyWindow,
  kEmptyData,
  kEmptyDataset,
  kOneClassOnly,
  kDimensionMismatch,
  kSingularDesign,
  kTooFewRows,
  kUnstratifiableData,
  kTooManyFeatures,
  kMissingCover,
  kTooFewInstances,
  kInfeasibleSpec,
  kInvalidArgument,
  kIo,
};

inline std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedRecord: return "MalformedRecord";
    case ErrorCode::kUnsortedTimestamps: return "UnsortedTimestamps";
    case ErrorCode::kEmptyWindow: return "EmptyWindow";
    case ErrorCode::kEmptyData: return "EmptyData";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kOneClassOnly: return "OneClassOnly";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kSingularDesign: return "SingularDesign";
    case ErrorCode::kTooFewRows: return "TooFewRows";
    case ErrorCode::kUnstratifiableData: return "UnstratifiableData";
    case ErrorCode::kTooManyFeatures: return "TooManyFeatures";
    case ErrorCode::kMissingCover: return "MissingCover";
    case ErrorCode::kTooFewInstances: return "TooFewInstances";
    case ErrorCode::kInfeasibleSpec: return "InfeasibleSpec";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

// All library failures are reported through this type. `line` is set for
// record-level parse errors (1-based).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> line = std::nullopt)
      : std::runtime_error(format(code, message, line)),
        code_(code),
        line_(line) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  static std::string format(ErrorCode code, const std::string& message,
                            std::optional<std::size_t> line) {
    std::string out(error_code_name(code));
    if (line) out += " (line " + std::to_string(*line) + ")";
    out += ": ";
    out += message;
    return out;
  }

  ErrorCode code_;
  std::optional<std::size_t> line_;
};

}  // namespace glancelab
