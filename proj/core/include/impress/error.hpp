#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace impress {

/// Failure categories surfaced by the library. The CLI maps each category to
/// an exit code and prints `error: <category>: <message>` on failure.
enum class ErrorKind {
  kShapeError,
  kDatasetNotFound,
  kLayoutViolation,
  kUnknownClass,
  kDecodeError,
  kInvalidCount,
  kEmptyInput,
  kBatchTooSmall,
  kInvalidMoments,
  kModelNotReady,
  kPairingError,
  kBackboneUnavailable,
  kInvalidThreshold,
  kDegenerateLabels,
  kStaleImpressions,
  kTrainingDiverged,
  kConfigParseError,
  kFingerprintMismatch,
  kIoError,
  kOutputLocked,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace impress
