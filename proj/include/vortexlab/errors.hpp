#pragma once

#include <stdexcept>
#include <string>

namespace vortex {

/// Invalid or inconsistent run configuration. The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data that violates a documented precondition (negative density, bad file).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure during a run: NaN, CFL violation, singular evaluation.
/// The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class StepSizeError : public NumericalError {
 public:
  StepSizeError(const std::string& what, double bound) : NumericalError(what), bound_(bound) {}
  /// Largest admissible time step at the moment of failure.
  double bound() const noexcept { return bound_; }

 private:
  double bound_;
};

class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

}  // namespace vortex
