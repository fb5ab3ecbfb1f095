#include "gcnbench/error.hpp"

namespace gcnbench {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Bounds: return "bounds error";
    case ErrorKind::Degenerate: return "degenerate input";
    case ErrorKind::Capacity: return "capacity error";
    case ErrorKind::Infeasible: return "infeasible";
    case ErrorKind::Format: return "format error";
    case ErrorKind::Io: return "I/O error";
    case ErrorKind::Shape: return "shape error";
    case ErrorKind::Numeric: return "numeric error";
    case ErrorKind::Config: return "config error";
    case ErrorKind::Comparison: return "comparison error";
    case ErrorKind::Internal: return "internal error";
  }
  return "error";
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Capacity:
    case ErrorKind::Infeasible:
      return 3;
    case ErrorKind::Io:
    case ErrorKind::Format:
      return 4;
    case ErrorKind::Numeric:
    case ErrorKind::Internal:
      return 1;
    default:
      return 2;
  }
}

}  // namespace gcnbench
