#pragma once

#include <stdexcept>
#include <string>

namespace orbk {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an input was violated (bad parameters, bad model description).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The requested operation is not defined for this model.
class Unsupported : public Error {
 public:
  using Error::Error;
};

/// A numerical check or convergence target failed.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace orbk
