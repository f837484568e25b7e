#pragma once

#include <stdexcept>
#include <string>

namespace causalot {

/// Malformed input: parse failures, broken tree invariants, bad parameters.
class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// An enumeration or tensor would exceed the configured size budget.
class BudgetExceeded : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// The LP engine could not certify an optimum (infeasible, unbounded, or
/// numerically unstable).
class SolverError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace causalot
