#pragma once

#include <stdexcept>
#include <string>

namespace hgplvm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Vector or matrix shapes that do not agree.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// Non-finite input or output where a finite value is required.
class NumericError : public Error {
public:
  using Error::Error;
};

/// Distribution or model parameter outside its domain.
class ParameterError : public Error {
public:
  using Error::Error;
};

/// Argument outside the range an operation accepts.
class ArgumentError : public Error {
public:
  using Error::Error;
};

/// Symmetric factorization failed even after the jitter retry.
class ConditioningError : public Error {
public:
  using Error::Error;
};

/// Invalid or incomplete run configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

} // namespace hgplvm
