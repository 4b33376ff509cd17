#pragma once

#include <stdexcept>
#include <string>

namespace phonon {

// Process exit codes used by the command-line runner.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitNumerical = 3,
  kExitAssumption = 4,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const { return kExitNumerical; }
};

// Malformed or inconsistent user input (also inadmissible coefficients).
class ConfigError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return kExitConfig; }
};

// Degenerate physical model: all-zero spectrum, zero flux normalizer, ...
class ModelError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return kExitConfig; }
};

class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, long step = -1)
      : Error(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

// A modelling assumption is violated by the configured experiment.
class AssumptionError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return kExitAssumption; }
};

class CoverageError : public Error {
 public:
  using Error::Error;
};

class ExtrapolationError : public Error {
 public:
  using Error::Error;
};

}  // namespace phonon
