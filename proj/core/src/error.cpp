#include "impress/error.hpp"

namespace impress {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kShapeError: return "shape-error";
    case ErrorKind::kDatasetNotFound: return "dataset-not-found";
    case ErrorKind::kLayoutViolation: return "layout-violation";
    case ErrorKind::kUnknownClass: return "unknown-class";
    case ErrorKind::kDecodeError: return "decode-error";
    case ErrorKind::kInvalidCount: return "invalid-count";
    case ErrorKind::kEmptyInput: return "empty-input";
    case ErrorKind::kBatchTooSmall: return "batch-too-small";
    case ErrorKind::kInvalidMoments: return "invalid-moments";
    case ErrorKind::kModelNotReady: return "model-not-ready";
    case ErrorKind::kPairingError: return "pairing-error";
    case ErrorKind::kBackboneUnavailable: return "backbone-unavailable";
    case ErrorKind::kInvalidThreshold: return "invalid-threshold";
    case ErrorKind::kDegenerateLabels: return "degenerate-labels";
    case ErrorKind::kStaleImpressions: return "stale-impressions";
    case ErrorKind::kTrainingDiverged: return "training-diverged";
    case ErrorKind::kConfigParseError: return "config-parse-error";
    case ErrorKind::kFingerprintMismatch: return "fingerprint-mismatch";
    case ErrorKind::kIoError: return "io-error";
    case ErrorKind::kOutputLocked: return "output-locked";
  }
  return "unknown";
}

}  // namespace impress
