#pragma once

#include <stdexcept>
#include <string>

namespace trc {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
  using Error::Error;
};

// Exact enumeration would exceed its configured budget.
class CapacityError : public Error {
public:
  using Error::Error;
};

// Rejection sampler ran out of attempts.
class SamplingError : public Error {
public:
  using Error::Error;
};

// NaN or other non-finite value where a number was required.
class NumericError : public Error {
public:
  using Error::Error;
};

// Iterative solver stopped without meeting its tolerance.
class ConvergenceError : public NumericError {
public:
  ConvergenceError(const std::string& what, double best_value)
      : NumericError(what), best_value_(best_value) {}
  double best_value() const noexcept { return best_value_; }

private:
  double best_value_;
};

// Objective and gradient disagree at the starting point.
class SetupError : public Error {
public:
  using Error::Error;
};

// Malformed configuration or channel description.
class ConfigError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

} // namespace trc
