#pragma once

#include <stdexcept>
#include <string>

namespace hashproctor {

/// Broad classes of failure. Tools map these onto exit codes and the
/// service maps them onto HTTP statuses.
enum class ErrorKind {
  InvalidInput,
  IncompatibleHash,
  Parse,
  Io,
  State,
  Capture,
  InsufficientCalibration,
  UndefinedMetric,
  DegenerateGeometry,
  Config,
  Conflict,
  NotFound,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

const char* to_string(ErrorKind kind) noexcept;

}  // namespace hashproctor
