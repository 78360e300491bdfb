#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace rcusum {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not agree.
class DimensionError : public Error {
 public:
  DimensionError(const std::string& what, long expected, long actual);

  long expected() const noexcept { return expected_; }
  long actual() const noexcept { return actual_; }

 private:
  long expected_;
  long actual_;
};

// An argument lies outside the mathematical domain of an operation
// (non-PD covariance, infeasible detector parameters, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// An iterative method stopped without meeting its tolerance.  The message
// carries the diagnostics of the last iterate.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

// Configuration document failed validation.  Holds every violation found.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> violations);

  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

}  // namespace rcusum
