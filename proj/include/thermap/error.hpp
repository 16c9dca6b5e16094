#pragma once

#include <stdexcept>
#include <string>

namespace thermap {

/// Failure categories. The CLI maps each one to a distinct exit code.
enum class ErrorKind {
  Parse,       ///< malformed input document
  Validation,  ///< well-formed input that violates a model invariant
  Dimension,   ///< vector/matrix sizes disagree
  Input,       ///< value out of the accepted physical range
  Solver,      ///< linear or iterative solver failed
  Runaway,     ///< electro-thermal fixed point diverged
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Validation: return "validation error";
    case ErrorKind::Dimension: return "dimension error";
    case ErrorKind::Input: return "input error";
    case ErrorKind::Solver: return "solver error";
    case ErrorKind::Runaway: return "thermal runaway";
  }
  return "error";
}

}  // namespace thermap
