#pragma once

#include <stdexcept>
#include <string>

namespace flatflow {

enum class ErrorCode {
  InvalidGrid,
  MarginViolation,
  EmptySet,
  FullGrid,
  DegenerateNormal,
  StepTooLarge,
  EmptyMinimizer,
  HorizonTooShort,
  RangeError,
  RadiusOutOfRange,
  EmptyCore,
  TooLarge,
  BadParams,
  ConfigError,
  IoError,
};

const char* to_string(ErrorCode code);

/// Exception carrying a machine-readable code; every public operation throws
/// this (never a bare std::runtime_error) so callers can map codes to exit
/// statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace flatflow
