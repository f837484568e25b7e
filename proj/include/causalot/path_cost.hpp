#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "causalot/scenario_tree.hpp"
#include "causalot/transport.hpp"

namespace causalot {

/// Cost of an N-tuple of full paths, one per process.
struct PathCost {
  std::string name;
  std::function<double(std::span<const Path* const>)> eval;

  double operator()(std::span<const Path* const> paths) const { return eval(paths); }
};

/// Cost of one path against another (process path x, task path y).
struct PairCost {
  std::string name;
  std::function<double(const Path&, const Path&)> eval;

  double operator()(const Path& x, const Path& y) const { return eval(x, y); }
};

/// Cost indexed by a tuple of leaf indices, one per tree.
using LeafCost = std::function<double(std::span<const std::size_t>)>;

/// d(x, y) = sum_t |x_t - y_t|_2, the path metric.
double path_distance(const Path& x, const Path& y);

/// sum_{i<j} d(x^i, x^j)^p. For two processes this is the AW_p^p integrand.
PathCost lp_sum_cost(double p);
/// sum_{i<j} sum_t |x_t^i - x_t^j|_2^2.
PathCost quadratic_cost();
/// Parses "lp_sum:<p>", "metric" (lp_sum:1) or "quadratic".
PathCost parse_path_cost(const std::string& spec);

/// Adds a constant to a cost.
PathCost shifted(PathCost cost, double kappa);

/// Binds a path cost to concrete trees so it can be evaluated on leaf tuples.
LeafCost bind_cost(const PathCost& cost, const std::vector<const ScenarioTree*>& trees);
/// Looks a leaf tuple up in a dense tensor with one axis per tree.
LeafCost tensor_cost(CostTensor tensor);

/// Pair cost sum_t scale * |x_t - y_t|_2^p.
PairCost power_pair_cost(double p, double scale = 1.0);

}  // namespace causalot
