#pragma once

#include <stdexcept>
#include <string>

namespace physagent {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Kinematics / planning.
class LimitViolation : public Error {
 public:
  using Error::Error;
};
class Unreachable : public Error {
 public:
  using Error::Error;
};
class NoConvergence : public Error {
 public:
  using Error::Error;
};
class UnknownObject : public Error {
 public:
  using Error::Error;
};

// Learning.
class EmptyDataset : public Error {
 public:
  using Error::Error;
};
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};
class UnfittedModel : public Error {
 public:
  using Error::Error;
};

// Reasoning.
class UnknownTask : public Error {
 public:
  using Error::Error;
};
class ParseError : public Error {
 public:
  using Error::Error;
};

// Remote services.
class TransportError : public Error {
 public:
  using Error::Error;
};
class Timeout : public TransportError {
 public:
  using TransportError::TransportError;
};
class MalformedResponse : public Error {
 public:
  using Error::Error;
};
class ServiceError : public Error {
 public:
  ServiceError(int status, const std::string& what)
      : Error(what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

// Statistics.
class UnbalancedGroups : public Error {
 public:
  using Error::Error;
};

}  // namespace physagent
