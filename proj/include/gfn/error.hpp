#pragma once

#include <stdexcept>
#include <string>

namespace gfn {

// Base for every error the library raises. `kind()` is the stable,
// machine-readable tag the CLI emits in its error record.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* kind() const noexcept { return "error"; }
};

// A precondition of an operation was violated by the caller.
class ContractViolation : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "contract_violation"; }
};

class ShapeError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "shape_error"; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "config_error"; }
};

// Exhaustive enumeration was requested on an environment that is too large.
class EnumerationRefused : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "enumeration_refused"; }
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "non_finite"; }
};

// A statistic is undefined for the given input (e.g. zero variance).
class UndefinedStatistic : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "undefined_statistic"; }
};

class CheckpointError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "checkpoint_error"; }
};

}  // namespace gfn
