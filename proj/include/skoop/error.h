#pragma once

#include <stdexcept>
#include <string>

namespace skoop {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operands have incompatible shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A value violates a documented precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Image contains NaN or Inf where finite samples are required.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// I/O failure on the external-denoiser wire protocol.
class BridgeError : public Error {
 public:
  using Error::Error;
};

/// Dense eigen-solver did not converge.
class EigenSolverError : public Error {
 public:
  using Error::Error;
};

/// File could not be read, written or parsed.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Experiment configuration failed validation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace skoop
