#pragma once

#include <stdexcept>
#include <string>

namespace rieszstab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Caller-side precondition (volume, regime, grid) not met.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class ResourceError : public Error {
 public:
  using Error::Error;
};

class ConfigurationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Truncation cannot proceed; the caller should take the large-asymmetry branch.
class NotApplicableError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

}  // namespace rieszstab
