#pragma once

#include <stdexcept>
#include <string>

namespace delocal {

// Base of every error the library throws. The CLI maps the concrete type to
// an exit code (config 2, numeric precondition 3, solver 4).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// A numeric precondition of an operation does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class RangeError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class DomainError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class ResourceError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class InvalidIndexError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace delocal
