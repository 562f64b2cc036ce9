#pragma once

#include <stdexcept>
#include <string>

namespace planarcda {

// Base of every error the library raises. The CLI maps all of these to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

// B + ridge*I (or a covariance) could not be factored.
class SingularityError : public NumericError {
 public:
  using NumericError::NumericError;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

// Violated experimental protocol: single class, unseen labels, bad reference pairing.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// A sample id is present in one view of a dataset directory but not the other.
class PairingError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace planarcda
