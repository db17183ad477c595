#ifndef STLF_ERRORS_HPP
#define STLF_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace stlf {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent tensor or layer shapes. Indicates a corrupted model or a caller bug.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Bad input data: unreadable files, malformed rows, series too short.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Non-finite loss or gradient, failed gradient check.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value or incompatible run settings.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace stlf

#endif  // STLF_ERRORS_HPP
