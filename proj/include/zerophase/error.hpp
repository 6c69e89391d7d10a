#pragma once

#include <limits>
#include <stdexcept>
#include <string>

namespace zerophase {

/// Invalid input: a violated precondition or a malformed parameter set.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure could not produce a result (lost branch, guard
/// exceeded, non-convergence).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A size guard on an exhaustive computation was exceeded.
class GuardExceeded : public SolverError {
 public:
  using SolverError::SolverError;
};

/// Raised when a metastable branch no longer has a fixed point; carries the
/// last temperature at which a solution was accepted (NaN when unknown).
class BranchTerminated : public SolverError {
 public:
  BranchTerminated(const std::string& what, double last_good_theta)
      : SolverError(what), last_good_theta_(last_good_theta) {}

  double last_good_theta() const noexcept { return last_good_theta_; }

 private:
  double last_good_theta_ = std::numeric_limits<double>::quiet_NaN();
};

}  // namespace zerophase
