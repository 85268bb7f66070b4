#pragma once

#include <stdexcept>
#include <string>

namespace dgc {

/// Base of every exception raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad or unreadable input file (JSON syntax, missing keys, schema version).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Network description violates a structural rule, or the reduction fails.
class ModelError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Repeated, zero or non-oscillatory eigenvalue in the swing model.
class DegenerateSpectrumError : public Error {
 public:
  using Error::Error;
};

/// The switching function has no root inside the search window.
class NoSwitchOpportunityError : public Error {
 public:
  NoSwitchOpportunityError(const std::string& what, double min_abs_h)
      : Error(what), min_abs_h_(min_abs_h) {}

  double min_abs_h() const noexcept { return min_abs_h_; }

 private:
  double min_abs_h_;
};

class ScheduleError : public Error {
 public:
  using Error::Error;
};

/// Adaptive integrator could not make progress.
class StiffnessError : public Error {
 public:
  using Error::Error;
};

class OptimizationError : public Error {
 public:
  using Error::Error;
};

}  // namespace dgc
