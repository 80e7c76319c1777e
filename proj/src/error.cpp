#include "depthguard/error.hpp"

namespace depthguard {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::shape_mismatch: return "shape_mismatch";
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::domain: return "domain";
    case ErrorCode::non_finite: return "non_finite";
    case ErrorCode::autograd: return "autograd";
    case ErrorCode::io: return "io";
    case ErrorCode::format: return "format";
    case ErrorCode::config: return "config";
    case ErrorCode::missing_checkpoint: return "missing_checkpoint";
  }
  return "unknown";
}

void fail(ErrorCode code, const std::string& detail) { throw Error(code, detail); }

}  // namespace depthguard
