#pragma once

#include <stdexcept>
#include <string>

namespace phasectl {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters, options, or usage. CLI exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input file; the message carries the byte offset or line.
class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Base of every numerical failure. CLI exit code 3.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Non-finite value produced by a stepper.
class BlowupError : public NumericalError {
 public:
  BlowupError(const std::string& what, int row, int col, int timestep = -1)
      : NumericalError(what), row_(row), col_(col), timestep_(timestep) {}

  int row() const { return row_; }
  int col() const { return col_; }
  // -1 when the failure did not happen inside a rollout.
  int timestep() const { return timestep_; }

 private:
  int row_;
  int col_;
  int timestep_;
};

// Singular Gram / regressor matrix during Jacobian estimation or identification.
class EstimationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace phasectl
