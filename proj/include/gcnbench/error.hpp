#pragma once

#include <stdexcept>
#include <string>

namespace gcnbench {

enum class ErrorKind {
  Parse,
  Bounds,
  Degenerate,
  Capacity,
  Infeasible,
  Format,
  Io,
  Shape,
  Numeric,
  Config,
  Comparison,
  Internal,
};

const char* to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so the CLI can map it
// onto a stable exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// 0 success, 2 config, 3 capacity/infeasibility, 4 I/O.
int exit_code_for(ErrorKind kind);

}  // namespace gcnbench
