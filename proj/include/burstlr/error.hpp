// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace burstlr {

// Base of every library error. Each subclass maps to a CLI exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inconsistent configuration or invalid arguments (exit code 1).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input file; `line` is 1-based, 0 when not line-specific.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Parameter outside the open parameter domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Observation outside the model's support.
class SupportError : public Error {
 public:
  using Error::Error;
};

// Numerical failure (exit code 2).
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Data for which the MLE leaves the open parameter domain.
class DegenerateDataError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, std::vector<double> last_iterate)
      : NumericalError(what), last_iterate_(std::move(last_iterate)) {}
  const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }

 private:
  std::vector<double> last_iterate_;
};

// A computed quantity broke a mathematical invariant (e.g. Lambda > 1).
class InvariantViolation : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class CalibrationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace burstlr
