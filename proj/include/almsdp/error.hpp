#pragma once

#include <stdexcept>
#include <string>

namespace almsdp {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Operand shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Problem data or an argument violates a documented precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// An iterative numerical routine failed or produced non-finite values.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace almsdp
