#pragma once

#include <stdexcept>
#include <string>

namespace stopbound {

// Base of every error raised by the library. `exit_code()` is the process
// status the command-line tool reports for it.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 2; }
};

// Malformed input: bad distribution, unparsable file, missing field.
class InputError : public Error {
 public:
  using Error::Error;
};

class ParseError : public InputError {
 public:
  using InputError::InputError;
};

class ProbSumError : public InputError {
 public:
  using InputError::InputError;
};

class SignError : public InputError {
 public:
  using InputError::InputError;
};

class DuplicateAtomError : public InputError {
 public:
  using InputError::InputError;
};

// A numerical precondition failed (tolerance, bracket, window).
class NumericalError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

class DomainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class OutOfRangeError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class BracketError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NoiseFloorError : public NumericalError {
 public:
  NoiseFloorError(const std::string& what, double floor)
      : NumericalError(what), floor_(floor) {}
  double floor() const noexcept { return floor_; }

 private:
  double floor_;
};

class IndexError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class RangeError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class BoundaryCoverageError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class CoverageError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Horizon doubling ran out before the tolerance was met. Carries the last
// value computed and its error estimate so callers may still use them.
class NoConvergenceError : public Error {
 public:
  NoConvergenceError(const std::string& what, double best_value, double err_est,
                     long long horizon)
      : Error(what), best_value_(best_value), err_est_(err_est), horizon_(horizon) {}
  int exit_code() const noexcept override { return 4; }
  double best_value() const noexcept { return best_value_; }
  double err_est() const noexcept { return err_est_; }
  long long horizon() const noexcept { return horizon_; }

 private:
  double best_value_;
  double err_est_;
  long long horizon_;
};

}  // namespace stopbound
