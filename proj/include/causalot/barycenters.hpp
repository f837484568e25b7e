#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "causalot/multicausal.hpp"
#include "causalot/path_cost.hpp"
#include "causalot/scenario_tree.hpp"
#include "causalot/transport.hpp"

namespace causalot {

/// Per-process, per-time cost c^i(x, y) = sum_t c_t^i(x_t, y_t).
struct SeparableCost {
  using Term = std::function<double(std::size_t process, int t, std::span<const double> x, std::span<const double> y)>;

  std::size_t processes = 0;
  int horizon = 0;
  Term term;
  /// lower_bounds[i][t-1] bounds c_t^i from below.
  std::vector<std::vector<double>> lower_bounds;
  std::string description;

  /// lambda_i * sum_k |x_k - y_k|^p at every time.
  static SeparableCost power(double p, std::vector<double> weights, int horizon);

  /// Explicit table per (process, time): states are looked up exactly in
  /// x_grid / y_grid and the cost is values[x_index][y_index].
  struct Table {
    std::vector<std::vector<double>> x_grid;
    std::vector<std::vector<double>> y_grid;
    std::vector<std::vector<double>> values;
  };
  /// tables[i][t-1].
  static SeparableCost tables(std::vector<std::vector<Table>> tables);

  double step(std::size_t i, int t, std::span<const double> x, std::span<const double> y) const {
    return term(i, t, x, y);
  }
  double path(std::size_t i, const Path& x, const Path& y) const;
  PairCost pair(std::size_t i) const;
};

/// Pointwise barycenter map phi_t^0(x_t^1..x_t^N).
struct Phi0Selector {
  enum class Mode { closed_form, grid };
  Mode mode = Mode::closed_form;
  std::vector<double> weights;
  /// grid[t-1]: candidate states at time t (grid mode).
  std::vector<std::vector<std::vector<double>>> grid;
  /// Declared slack against the infimum over all states (grid mode).
  double epsilon = 0.0;

  std::vector<double> select(int t, std::span<const std::vector<double>* const> xs, const SeparableCost& cost) const;
};

/// Closed-form selector sum_i lambda_i x^i, the minimizer of
/// sum_i lambda_i |x^i - y|^2. Throws unless lambda > 0 sums to 1.
Phi0Selector phi0_quadratic(std::vector<double> weights);
/// Grid-argmin selector; ties go to the first grid point.
Phi0Selector phi0_grid(std::vector<std::vector<std::vector<double>>> grid, double epsilon = 0.0);

/// c(x^{1:N}) = sum_t sum_i c_t^i(x_t^i, phi_t^0(x_t^{1:N})).
PathCost aggregate_cost(const SeparableCost& cost, const Phi0Selector& selector);

/// Barycenter on the product filtration: node (t, k) of `tree` is the node
/// tuple members[t-1][k] of the inputs, with state phi_t^0 of its members.
struct BarycenterProcess {
  ScenarioTree tree;
  std::vector<std::vector<std::vector<std::size_t>>> members;
  /// Leaf-tuple of the inputs behind each leaf of `tree`.
  const std::vector<std::size_t>& leaf_members(std::size_t leaf) const { return members.back().at(leaf); }
};

struct BicausalBarycenter {
  double value = 0.0;
  BarycenterProcess process;
  MulticausalCoupling coupling;
  DppResult dpp;
};

/// Runs the multicausal recursion with the aggregated cost; the coupling's
/// pushforward under the selector is the barycenter.
BicausalBarycenter bc_barycenter(const std::vector<ScenarioTree>& trees, const SeparableCost& cost,
                                 const Phi0Selector& selector, std::size_t budget = kDefaultTupleBudget);

/// sum_i of bicausal transport values between X^i and the candidate with cost c^i.
double bc_bary_value(const std::vector<ScenarioTree>& trees, const SeparableCost& cost, const ScenarioTree& candidate,
                     std::size_t budget = kDefaultTupleBudget);

struct CausalOtResult {
  double value = 0.0;
  /// Axes (leaves of X, leaves of Y).
  TransportPlan plan;
  LpSolution lp;
};

/// Causal transport X -> Y: the test functions constrain X only.
CausalOtResult causal_ot(const ScenarioTree& x, const ScenarioTree& y, const PairCost& cost,
                         std::size_t budget = kDefaultTupleBudget);
/// Bicausal transport value via the LP (both directions constrained).
CausalOtResult bicausal_ot(const ScenarioTree& x, const ScenarioTree& y, const PairCost& cost,
                           std::size_t budget = kDefaultTupleBudget);

struct CausalBarycenterSolution {
  double value = 0.0;
  /// Distribution over task leaves (all leaves listed, zeros kept).
  DiscreteDistribution nu;
  /// plans[i] has axes (leaves of X^i, task leaves).
  std::vector<TransportPlan> plans;
  /// f[i] on leaves of X^i.
  std::vector<std::vector<double>> f;
  /// g[i] on task leaves; g[0] = -(g[1] + ... + g[N-1]) so they sum to zero.
  std::vector<std::vector<double>> g;
  /// Test-function coefficients of G^i, blocks over (task node at t-1, own node at t).
  std::vector<DualCertificate> coefficients;
  double dual_value = 0.0;
  LpSolution lp;
};

/// One joint LP over nu on the task leaves and causal plans pi^i with
/// first marginal P^i and common second marginal nu.
CausalBarycenterSolution causal_barycenter(const std::vector<ScenarioTree>& trees, const ScenarioTree& tasks,
                                           const std::vector<PairCost>& costs,
                                           std::size_t budget = kDefaultTupleBudget);

struct CausalDualCheck {
  /// min over (leaf, task leaf) of c^i + G^i - f^i - g^i.
  double min_slack = 0.0;
  /// max |slack| on the support of pi^i.
  double support_slack = 0.0;
  double dual_value = 0.0;
  /// max |sum_i g^i| over task leaves.
  double clearing = 0.0;
};

CausalDualCheck check_causal_dual(const CausalBarycenterSolution& sol, const std::vector<ScenarioTree>& trees,
                                  const ScenarioTree& tasks, const std::vector<PairCost>& costs);

struct AnticausalBarycenter {
  double value = 0.0;
  DiscreteDistribution nu;
  std::vector<TransportPlan> plans;
  /// kernels[i][y]: law of X^i's leaf given task leaf y (empty when nu(y) = 0).
  std::vector<std::vector<DiscreteDistribution>> kernels;
  /// Duals of the joint LP: f[i] on leaves of X^i, g[i] on support leaves.
  std::vector<std::vector<double>> f;
  std::vector<std::vector<double>> g;
  double dual_value = 0.0;
};

/// Classical barycenter of the full-path laws on the task support, plus the
/// disintegration kernels used to glue an anticausal barycenter.
AnticausalBarycenter anticausal_barycenter(const std::vector<ScenarioTree>& trees, const std::vector<PairCost>& costs,
                                           const ScenarioTree& support);

struct CounterexampleReport {
  int n_quant = 0;
  double moment2 = 0.0;
  double moment6 = 0.0;
  /// Product coupling pushed through phi(x^1, x^2) = x^1 + x^2.
  double cost_phi0_construction = 0.0;
  /// Product coupling pushed through the stationary map (x^1 + x^2) / 2.
  double cost_phi0_stationary = 0.0;
  /// sum_i 1/2 CW_2^2(X^i, (0, Y^3)).
  double cost_canonical_candidate = 0.0;
  std::vector<double> candidate_terms;
  /// LP duality gap behind each candidate term.
  std::vector<double> candidate_gaps;
};

/// X^1 = (Y, Y^3), X^2 = (0, Y^3) with Y quantized by n Gauss-Hermite nodes.
CounterexampleReport counterexample_demo(int n_quant);
/// The two input trees of the demo.
std::vector<ScenarioTree> counterexample_trees(int n_quant);

}  // namespace causalot
