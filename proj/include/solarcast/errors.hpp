#pragma once

#include <stdexcept>
#include <string>

namespace solarcast {

// Root of every error raised by the library. The CLI maps the three
// families below onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration or out-of-contract arguments (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};
class ParameterError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};
class RangeError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

// Problems with input data (exit code 3).
class DataError : public Error {
 public:
  using Error::Error;
};
class ParseError : public DataError {
 public:
  using DataError::DataError;
};
class IntegrityError : public DataError {
 public:
  using DataError::DataError;
};
class LookupError : public DataError {
 public:
  using DataError::DataError;
};

// Numerical or optimisation failures (exit code 4).
class TrainingFailure : public Error {
 public:
  using Error::Error;
};
class SingularityError : public TrainingFailure {
 public:
  using TrainingFailure::TrainingFailure;
};

class UndefinedMetric : public Error {
 public:
  using Error::Error;
};

}  // namespace solarcast
