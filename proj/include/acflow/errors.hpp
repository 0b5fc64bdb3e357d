#pragma once

#include <stdexcept>
#include <string>

namespace acflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller broke a documented precondition (grid mismatch, bad parameter).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

class PicardDiverged : public Error {
 public:
  using Error::Error;
};

class KrylovBreakdown : public Error {
 public:
  using Error::Error;
};

class MissingHistory : public Error {
 public:
  using Error::Error;
};

/// The adaptive controller hit its step floor and still cannot satisfy the divergence tolerance.
class StepStuck : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A manufactured solution failed its finite-difference residual check.
class OracleFailed : public Error {
 public:
  using Error::Error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ContractViolation(what);
}

}  // namespace acflow
