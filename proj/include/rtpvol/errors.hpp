#pragma once

#include <stdexcept>
#include <string>

namespace rtpvol {

// Base of everything this library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad parameters or configuration: the caller asked for something the model
// does not admit (nonconvex cost, alpha <= 1, unknown config key, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A numerical-domain failure: inputs are well formed, but the requested value
// does not exist on the truncated domain or is not finite.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// A price or quantity falls outside the range of a marginal map.
class RangeError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Range failure inside a closed-loop step; simulators treat it as divergence.
class DivergenceError : public RangeError {
 public:
  using RangeError::RangeError;
};

// Predicted demand is zero or negative.
class DegenerateDemandError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// A disturbance sample exceeds its declared amplitude bound kappa.
class DisturbanceBoundError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Elasticity is undefined (zero quantity raised to a negative power).
class SingularityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Non-finite values where finite ones are required, or empty search domains.
class DomainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// An iterative method exhausted its budget. This is an internal failure, not
// a property of the inputs.
class ConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class CalibrationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Open-loop baseline has zero volatility, so a ratio against it is undefined.
class DegenerateBaselineError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace rtpvol
