#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "causalot/lp.hpp"
#include "causalot/scenario_tree.hpp"

namespace causalot {

inline constexpr std::size_t kDefaultTensorBudget = 10'000'000;

/// Sparse nonnegative measure on a product of finite supports. Atom entries
/// are positions into the corresponding marginal's support list.
struct TransportPlan {
  /// Time slice the plan couples (1..T), or 0 for full path space.
  int time = 0;
  std::vector<std::vector<std::size_t>> atoms;
  std::vector<double> weights;
  std::vector<DiscreteDistribution> marginals;

  std::size_t arity() const { return marginals.size(); }
  /// Mass per support position on the given axis.
  std::vector<double> pushforward(std::size_t axis) const;
  /// Total-variation distance between the pushforward and the declared
  /// marginal on `axis`.
  double marginal_tv(std::size_t axis) const;
  double max_marginal_tv() const;
};

/// Dense cost over a product of supports, row-major with axis 0 slowest.
struct CostTensor {
  std::vector<std::size_t> dims;
  std::vector<double> data;

  std::size_t size() const;
  std::size_t offset(std::span<const std::size_t> index) const;
  double at(std::span<const std::size_t> index) const { return data[offset(index)]; }
};

struct MultimarginalResult {
  double value = 0.0;
  TransportPlan plan;
  /// Potentials per marginal support position. Blocks 0..N-2 are pinned to
  /// zero at their first atom; the last block absorbs the constant.
  std::vector<std::vector<double>> duals;
  double dual_gap = 0.0;
  std::size_t iterations = 0;
};

/// Multimarginal transport LP over all tuples of the marginal supports.
/// Throws ValidationError on shape mismatch, BudgetExceeded when the tensor
/// holds more than `budget` entries, SolverError if the LP fails.
MultimarginalResult multimarginal_ot(const std::vector<DiscreteDistribution>& marginals, const CostTensor& cost,
                                     std::size_t budget = kDefaultTensorBudget);

/// Two-marginal special case; cost[i][j] couples mu position i with nu position j.
MultimarginalResult classical_ot(const DiscreteDistribution& mu, const DiscreteDistribution& nu,
                                 const std::vector<std::vector<double>>& cost);

struct FixedSupportBarycenter {
  double value = 0.0;
  /// Distribution over support positions 0..S-1 (zero weights kept).
  DiscreteDistribution nu;
  /// Plan i has axes (support, measure i).
  std::vector<TransportPlan> plans;
  /// Row duals: f[i] on the atoms of measure i, g[i] on the support. They
  /// satisfy f_i(a) + g_i(s) <= lambda_i c_i(s, a) and sum_i g_i >= 0.
  std::vector<std::vector<double>> f;
  std::vector<std::vector<double>> g;
  double dual_value = 0.0;
  std::size_t iterations = 0;
};

/// min over nu on a fixed support of sum_i lambda_i W_{c_i}(nu, mu_i), solved
/// as one joint LP in nu and all plans. costs[i][s][a] is the cost of
/// support point s against atom a of measures[i].
FixedSupportBarycenter wasserstein_barycenter_fixed_support(
    const std::vector<DiscreteDistribution>& measures, const std::vector<double>& lambdas,
    const std::vector<std::vector<std::vector<double>>>& costs, std::size_t support_size);

namespace detail {
/// Joint barycenter LP without weight validation; lambdas multiply costs.
FixedSupportBarycenter barycenter_lp(const std::vector<DiscreteDistribution>& measures,
                                     const std::vector<double>& lambdas,
                                     const std::vector<std::vector<std::vector<double>>>& costs,
                                     std::size_t support_size);
}  // namespace detail

/// Total-variation distance 0.5 * sum |p - q| between equal-length vectors.
double total_variation(std::span<const double> p, std::span<const double> q);

}  // namespace causalot
