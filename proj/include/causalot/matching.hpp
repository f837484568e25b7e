#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "causalot/barycenters.hpp"
#include "causalot/path_cost.hpp"
#include "causalot/scenario_tree.hpp"
#include "causalot/transport.hpp"

namespace causalot {

/// Principal X^0 with utility u, agent populations X^1..X^N with costs c^i,
/// and a finite task tree. The principal's cost is c^0 = -u.
class MatchingInstance {
public:
  MatchingInstance(ScenarioTree principal, PairCost utility, std::vector<ScenarioTree> agents,
                   std::vector<PairCost> agent_costs, ScenarioTree tasks);

  /// Population 0 is the principal.
  std::size_t populations() const { return trees_.size(); }
  const std::vector<ScenarioTree>& trees() const { return trees_; }
  const std::vector<PairCost>& costs() const { return costs_; }
  const ScenarioTree& tasks() const { return tasks_; }
  const PairCost& utility() const { return utility_; }

private:
  std::vector<ScenarioTree> trees_;
  std::vector<PairCost> costs_;
  PairCost utility_;
  ScenarioTree tasks_;
};

struct Equilibrium {
  /// wages[i][y] for population i on task leaf y; wages[0] is the principal's.
  std::vector<std::vector<double>> wages;
  DiscreteDistribution nu;
  /// plans[i] has axes (leaves of X^i, task leaves).
  std::vector<TransportPlan> plans;
  /// values[i] = V^i(w^i), the best-response value at the equilibrium wage.
  std::vector<double> values;
  CausalBarycenterSolution barycenter;
};

/// Causal barycenter over all populations; wages are the second-marginal
/// potentials (the principal's fixed by clearing).
Equilibrium solve_matching(const MatchingInstance& instance);

struct BestResponse {
  double value = 0.0;
  TransportPlan plan;
};

/// min over causal plans with first marginal P^i and free second marginal
/// of E[c^i - w], with w given per task leaf.
BestResponse best_response(const MatchingInstance& instance, std::size_t population, const std::vector<double>& wage);

struct EquilibriumReport {
  bool clearing_ok = false;
  /// Task leaves (as id paths) where clearing fails.
  std::vector<std::string> clearing_failures;
  std::vector<double> optimality_gaps;
  std::vector<bool> optimality_ok;
  bool common_marginal_ok = false;
  double worst_marginal_tv = 0.0;
  bool causal_ok = false;
  double worst_causal_violation = 0.0;
  bool pass = false;
};

inline constexpr double kOptimalityTolerance = 1e-7;

EquilibriumReport verify_equilibrium(const MatchingInstance& instance, const Equilibrium& eq);

/// "id1/id2/.../idT" for a leaf of a tree.
std::string leaf_label(const ScenarioTree& tree, std::size_t leaf);

}  // namespace causalot
