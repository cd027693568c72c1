#pragma once

#include <stdexcept>
#include <string>

namespace tunnel {

/// Input outside the mathematical domain of an operation (bad angles, unphysical Bloch vector).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid configuration: scenario files, jump configs, sweep axes.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input whose structure does not match what an operation needs (e.g. parity ordering).
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A propagated or computed state stopped satisfying its invariants.
class NumericalFailure : public std::runtime_error {
 public:
  explicit NumericalFailure(const std::string& what, double time = -1.0)
      : std::runtime_error(what), time_(time) {}

  /// Simulation time at which the failure was detected, or -1 when not time-related.
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// Sampling too coarse to resolve the feature being measured.
class ResolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tunnel
