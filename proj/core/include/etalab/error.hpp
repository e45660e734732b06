#pragma once

#include <stdexcept>
#include <string>

namespace etalab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad network, invalid partition, unknown descriptor.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A numerical precondition failed (non-PSD covariance, singular block).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Experiment configuration that cannot be run.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace etalab
