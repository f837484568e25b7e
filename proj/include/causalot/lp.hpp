#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace causalot {

/// Problem sizes above which solve_lp refuses with BudgetExceeded.
inline constexpr std::size_t kMaxLpRows = 200'000;
inline constexpr std::size_t kMaxLpNonzeros = 50'000'000;

/// One equality constraint sum_j coef_j x_j = rhs.
struct LpRow {
  std::vector<std::pair<std::size_t, double>> terms;
  double rhs = 0.0;
};

/// min c^T x  s.t.  A x = b,  x >= 0.
struct LpProblem {
  std::vector<double> objective;
  std::vector<LpRow> rows;

  std::size_t num_vars() const { return objective.size(); }
  std::size_t add_var(double cost) {
    objective.push_back(cost);
    return objective.size() - 1;
  }
  std::size_t add_row(LpRow row) {
    rows.push_back(std::move(row));
    return rows.size() - 1;
  }
  /// Throws ValidationError if a row references an undeclared variable or
  /// carries a non-finite coefficient.
  void validate() const;
};

enum class LpStatus { optimal, infeasible, unbounded, numerical_failure };

const char* to_string(LpStatus status);

struct LpSolution {
  LpStatus status = LpStatus::numerical_failure;
  std::vector<double> x;
  /// One multiplier per constraint row, in the orientation of the row as
  /// given: reduced costs c - A^T y are >= 0 at optimality.
  std::vector<double> duals;
  double objective = 0.0;
  double dual_objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  std::size_t iterations = 0;
  std::size_t redundant_rows = 0;
  std::string diagnostics;

  bool optimal() const { return status == LpStatus::optimal; }
};

struct LpOptions {
  double pivot_tolerance = 1e-9;
  double optimality_tolerance = 1e-11;
  double feasibility_tolerance = 1e-9;
  std::size_t max_iterations = 2'000'000;
  /// Consecutive degenerate pivots before the right-hand side is perturbed.
  std::size_t degenerate_streak = 50;
  /// Basis updates between fresh LU factorizations.
  std::size_t refactor_interval = 64;
};

/// Two-phase revised primal simplex. The basis is held as a sparse LU
/// factorization with product-form updates and refactored periodically.
/// Pricing is Dantzig's rule with ties broken toward the smallest column
/// index and the ratio test is Harris's two-pass rule. Long degenerate runs
/// perturb the right-hand side and a dual simplex pass removes the
/// perturbation afterwards. Primal and dual values are recomputed from a
/// fresh factorization of the final basis; redundant equality rows receive a
/// zero multiplier.
///
/// Reentrant: no state is shared between calls.
LpSolution solve_lp(const LpProblem& problem, const LpOptions& options = {});

/// solve_lp, throwing SolverError unless the status is optimal.
LpSolution solve_lp_checked(const LpProblem& problem, const LpOptions& options = {});

}  // namespace causalot
