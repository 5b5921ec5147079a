#pragma once

#include <stdexcept>
#include <string>

namespace react {

// Error taxonomy. Every failure surfaced to the CLI maps onto one of these
// and from there onto an exit code (see tools/react_cli.cpp).

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* kind() const noexcept { return "error"; }
};

// Bad dimensions, bad hyperparameters, unknown config keys.
class ConfigError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "config"; }
};

// Caller passed an argument outside the operation's domain.
class InputError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "input"; }
};

// Dataset parse failures and dataset invariant violations.
class DataError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "data"; }
};

// Non-finite losses and other numerical failures during training.
class TrainingError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "training"; }
};

class CheckpointError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "checkpoint"; }
};

class IoError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "io"; }
};

}  // namespace react
