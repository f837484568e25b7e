#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "causalot/causality.hpp"
#include "causalot/path_cost.hpp"
#include "causalot/scenario_tree.hpp"
#include "causalot/transport.hpp"

namespace causalot {

inline constexpr std::size_t kDefaultTupleBudget = 1'000'000;

/// V(t, node tuple) for t = 0..T. values[t] is indexed by the mixed-radix
/// encoding of the node tuple over the level sizes at depth t (one entry at
/// t = 0).
struct ValueFunction {
  std::vector<TupleSpace> spaces;
  std::vector<std::vector<double>> values;

  double at(int t, std::span<const std::size_t> nodes) const { return values.at(t).at(spaces.at(t).encode(nodes)); }
  double root() const { return values.at(0).at(0); }
};

/// Optimal one-step kernels: plans[t][tuple] couples the children kernels of
/// the depth-t node tuple (t = 0 is the virtual root). Plan marginals carry
/// child node indices at depth t+1 as their support.
struct KernelPolicy {
  std::vector<TupleSpace> spaces;
  std::vector<std::vector<TransportPlan>> plans;
  /// potentials[t][tuple][i][k]: inner dual of process i at its k-th child.
  std::vector<std::vector<std::vector<std::vector<double>>>> potentials;
};

/// Sparse measure on tuples of leaf indices, one leaf per tree.
struct MulticausalCoupling {
  std::vector<std::vector<std::size_t>> leaves;
  std::vector<double> weights;
  /// Set when the coupling was assembled from a policy.
  std::shared_ptr<const KernelPolicy> policy;

  std::size_t arity() const { return leaves.empty() ? 0 : leaves.front().size(); }
  std::size_t size() const { return weights.size(); }
  /// Mass on each leaf of coordinate i.
  std::vector<double> marginal(std::size_t i, std::size_t num_leaves) const;
  double expectation(const LeafCost& cost) const;
};

/// Merges duplicate leaf tuples, drops nonpositive weights, sorts atoms.
MulticausalCoupling canonicalize(std::vector<std::vector<std::size_t>> leaves, std::vector<double> weights);

/// Dual certificate for the multicausal problem: potentials f^i on leaves
/// and test-function coefficients a_t^i(A, b). The coefficients are stored
/// densely per (i, t) block, indexed by the others' node tuple at t-1 and the
/// own node at t.
struct DualCertificate {
  std::vector<std::vector<double>> potentials;
  struct Block {
    std::size_t process = 0;
    int step_time = 0;
    TupleSpace others;
    std::vector<std::size_t> other_coords;
    /// coefficients[others_flat * level_size(t) + own]
    std::vector<double> coefficients;
  };
  std::vector<Block> blocks;
  double dual_value = 0.0;

  /// F(leaves) = sum over blocks of a(A, b) - sum_{b'} P(b'|parent) a(A, b').
  double martingale_term(const std::vector<const ScenarioTree*>& trees, std::span<const std::size_t> leaves) const;
  double potential_sum(std::span<const std::size_t> leaves) const;
};

struct DualCheck {
  double dual_value = 0.0;
  /// min over all leaf tuples of c + F - sum f^i.
  double min_slack = 0.0;
  /// max |integral of F| over the supplied coupling.
  double martingale_integral = 0.0;
};

DualCheck check_certificate(const DualCertificate& cert, const std::vector<const ScenarioTree*>& trees,
                            const LeafCost& cost, const MulticausalCoupling& coupling,
                            std::size_t budget = kDefaultTupleBudget);

struct DppResult {
  double value = 0.0;
  ValueFunction values;
  std::shared_ptr<const KernelPolicy> policy;
  std::size_t lp_solves = 0;
  std::size_t lp_iterations = 0;
  double max_inner_gap = 0.0;
};

/// Backward recursion V(T) = c, V(t) = inner multimarginal transport of V(t+1)
/// over the children kernels of each node tuple.
DppResult mc_dpp(const std::vector<const ScenarioTree*>& trees, const LeafCost& cost,
                 std::size_t budget = kDefaultTupleBudget);
DppResult mc_dpp(const std::vector<ScenarioTree>& trees, const PathCost& cost,
                 std::size_t budget = kDefaultTupleBudget);

/// Dual certificate assembled from the inner transport duals: f^i collects
/// the first-step potentials and a_t^i(A, b) = -phi_t^i(A, parent(b); b), so
/// that telescoping the inner constraints gives sum f^i <= c + F.
DualCertificate dpp_certificate(const DppResult& dpp, const std::vector<const ScenarioTree*>& trees);

/// Multiplies policy kernels along every path: pi = K_1 (x) K_2 (x) ... (x) K_T.
MulticausalCoupling assemble_coupling(std::shared_ptr<const KernelPolicy> policy,
                                      const std::vector<const ScenarioTree*>& trees);

struct Witness {
  std::size_t process = 0;
  /// Time of the own step (2..T); the others' information is at step_time-1.
  int step_time = 0;
  int info_time = 0;
  std::vector<std::string> others;
  std::string own;
  double value = 0.0;
  std::string description;
};

struct CausalityReport {
  bool pass = false;
  double worst_violation = 0.0;
  double marginal_tv = 0.0;
  std::vector<Witness> witnesses;
};

inline constexpr double kCausalityTolerance = 1e-8;

/// Integrates the indicator test functions of the constrained coordinates
/// (all coordinates when `constrained` is empty) against the coupling.
/// Throws ValidationError when marginals differ from the tree laws by more
/// than 1e-9 in total variation.
CausalityReport verify_multicausal(const MulticausalCoupling& coupling, const std::vector<const ScenarioTree*>& trees,
                                   std::vector<std::size_t> constrained = {}, std::size_t max_witnesses = 20);

/// Test-function integrals only, without the marginal check. Used for plans
/// whose unconstrained coordinates carry a law other than the tree's own
/// (task supports, where tree probabilities are ignored).
CausalityReport check_causality(const MulticausalCoupling& coupling, const std::vector<const ScenarioTree*>& trees,
                                std::vector<std::size_t> constrained = {}, std::size_t max_witnesses = 20);

struct OracleResult {
  double value = 0.0;
  MulticausalCoupling coupling;
  DualCertificate certificate;
  LpSolution lp;
};

/// One LP over all leaf tuples: marginal blocks plus the test-function rows.
OracleResult brute_force_mcot(const std::vector<const ScenarioTree*>& trees, const LeafCost& cost,
                              std::size_t budget = kDefaultTupleBudget);
OracleResult brute_force_mcot(const std::vector<ScenarioTree>& trees, const PathCost& cost,
                              std::size_t budget = kDefaultTupleBudget);

/// Pushforward onto the coordinates in `subset` (in the order given).
MulticausalCoupling restrict_coupling(const MulticausalCoupling& coupling, const std::vector<std::size_t>& subset);

/// Glues pi (over trees 1..M) and gamma (over trees M..N) along the shared
/// coordinate M: pi(w_1..w_M) * gamma(w_M..w_N) / gamma_M(w_M).
/// `shared_leaves` is the leaf count of tree M.
MulticausalCoupling glue(const MulticausalCoupling& pi, const MulticausalCoupling& gamma, std::size_t shared_leaves);

/// (mc_dpp value with cost d(x, y)^p)^(1/p), d the summed path metric.
double aw_distance(const ScenarioTree& a, const ScenarioTree& b, double p);

std::vector<const ScenarioTree*> pointers(const std::vector<ScenarioTree>& trees);

}  // namespace causalot
