#include "hashproctor/error.hpp"

namespace hashproctor {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::IncompatibleHash: return "incompatible-hash";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Io: return "io";
    case ErrorKind::State: return "state";
    case ErrorKind::Capture: return "capture";
    case ErrorKind::InsufficientCalibration: return "insufficient-calibration";
    case ErrorKind::UndefinedMetric: return "undefined-metric";
    case ErrorKind::DegenerateGeometry: return "degenerate-geometry";
    case ErrorKind::Config: return "config";
    case ErrorKind::Conflict: return "conflict";
    case ErrorKind::NotFound: return "not-found";
  }
  return "unknown";
}

}  // namespace hashproctor
