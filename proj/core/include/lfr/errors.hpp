#pragma once

#include <stdexcept>
#include <string>

namespace lfr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or vector dimensions do not agree with the architecture.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value or unknown option.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf, factorization failure, solver blow-up, training divergence.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A point lies outside the domain an operator is defined on.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// File could not be read, written, or parsed.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace lfr
