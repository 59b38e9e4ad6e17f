#pragma once

#include <stdexcept>
#include <string>

namespace harris {

/// Raised when a caller violates an operation's precondition.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical routine cannot produce a trustworthy answer
/// (singular systems, non-finite intermediate values).
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double residual = 0.0)
      : std::runtime_error(what), residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace harris
