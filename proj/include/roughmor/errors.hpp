#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace roughmor {

/// Bad shapes, out-of-range parameters, malformed input files.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A mathematical precondition of an operation does not hold (unstable
/// system, nonlinearity where a linear system is required, singular K, ...).
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The requested computation exceeds what the dense code path supports.
class CapabilityError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

/// Floating point breakdown: overflow, singular factorization, failed solve.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonConvergenceError : public NumericalError {
 public:
  NonConvergenceError(const std::string& what, double last_residual)
      : NumericalError(what), last_residual_(last_residual) {}
  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

/// Time stepping failed at a specific step index.
class StepFailure : public NumericalError {
 public:
  StepFailure(const std::string& what, std::size_t step)
      : NumericalError(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace roughmor
