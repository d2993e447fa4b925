#pragma once

#include <stdexcept>
#include <string>

namespace cdanneal {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad argument: size mismatch, out-of-range time, unknown name.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Problem too large for a dense or bitmask representation.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Malformed instance or input document.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Ensemble / CLI configuration rejected before any compute starts.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// NaN, norm loss, failed decomposition.
class NumericError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public NumericError {
 public:
  using NumericError::NumericError;
};

class DegeneracyError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Too few usable points for an exponential fit.
class FitError : public Error {
 public:
  using Error::Error;
};

}  // namespace cdanneal
