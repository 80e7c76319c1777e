#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace depthguard {

enum class ErrorCode {
  shape_mismatch,
  invalid_argument,
  domain,
  non_finite,
  autograd,
  io,
  format,
  config,
  missing_checkpoint,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Library-wide exception. `code()` is stable and machine-parsable; the
/// message carries the human-readable detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& detail);

}  // namespace depthguard
