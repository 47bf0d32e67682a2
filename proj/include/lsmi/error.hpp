#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lsmi {

enum class ErrorKind {
  invalid_input,
  empty_input,
  unsupported_event,
  invalid_config,
  training_diverged,
  io,
};

/// Single exception type for the library; the C API maps `kind()` onto its
/// status codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised when an optimizer produces a non-finite loss.
class TrainingDiverged : public Error {
 public:
  TrainingDiverged(std::size_t step, const std::string& what)
      : Error(ErrorKind::training_diverged,
              what + " (step " + std::to_string(step) + ")"),
        step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace lsmi
