#pragma once

#include <stdexcept>
#include <string>

namespace pmca {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates a model, control or configuration invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed (non-convergence, loss of positivity, ...).
class NumericError : public Error {
 public:
  NumericError(const std::string& what, double residual = 0.0)
      : Error(what), residual_(residual) {}

  /// Last residual or offending value observed before giving up.
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace pmca
