#pragma once

#include <cmath>
#include <map>
#include <random>
#include <vector>

#include "causalot/multicausal.hpp"
#include "causalot/random_instances.hpp"
#include "causalot/scenario_tree.hpp"

namespace testing {

using namespace causalot;

inline std::vector<ScenarioTree> random_trees(std::mt19937_64& rng, std::size_t n, int horizon,
                                              std::size_t max_branching, std::size_t min_branching = 1) {
  RandomTreeOptions opts;
  opts.horizon = horizon;
  opts.max_branching = max_branching;
  opts.min_branching = min_branching;
  std::vector<ScenarioTree> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_tree(rng, opts));
  return out;
}

inline ScenarioTree tree_from(const char* json) { return load_tree(json); }

/// Binary tree with states (a, a +/- b) and split probability q.
inline ScenarioTree binary(double a, double b, double q) {
  std::vector<std::vector<TreeNode>> levels(2);
  levels[0].push_back(TreeNode{"r", -1, 1.0, std::nullopt, {a}});
  levels[1].push_back(TreeNode{"u", 0, q, std::nullopt, {a + b}});
  levels[1].push_back(TreeNode{"d", 0, 1.0 - q, std::nullopt, {a - b}});
  return ScenarioTree::from_levels(std::move(levels));
}

/// Checks the conditional-independence form of multicausality directly from
/// conditional frequencies: for each coordinate i and step t, the law of
/// own node at t given (all nodes at t-1) equals the tree kernel. Returns
/// the worst absolute deviation of joint masses.
inline double conditional_gap(const MulticausalCoupling& c, const std::vector<const ScenarioTree*>& trees) {
  const std::size_t n = trees.size();
  const int horizon = trees.front()->horizon();
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (int t = 2; t <= horizon; ++t) {
      // key: nodes of everyone at t-1, then own node at t
      std::map<std::vector<std::size_t>, double> joint, base;
      for (std::size_t k = 0; k < c.size(); ++k) {
        std::vector<std::size_t> key;
        for (std::size_t j = 0; j < n; ++j) key.push_back(trees[j]->ancestor(horizon, c.leaves[k][j], t - 1));
        base[key] += c.weights[k];
        key.push_back(trees[i]->ancestor(horizon, c.leaves[k][i], t));
        joint[key] += c.weights[k];
      }
      for (const auto& [key, mass] : base) {
        const ScenarioTree& tr = *trees[i];
        for (std::size_t child : tr.children(t - 1, key[i])) {
          auto full = key;
          full.push_back(child);
          auto it = joint.find(full);
          const double got = it == joint.end() ? 0.0 : it->second;
          worst = std::max(worst, std::abs(got - mass * tr.node(t, child).prob));
        }
      }
    }
  return worst;
}

inline MulticausalCoupling product_coupling(const std::vector<const ScenarioTree*>& trees) {
  std::vector<std::size_t> dims;
  for (auto* t : trees) dims.push_back(t->num_leaves());
  TupleSpace space(dims);
  std::vector<std::vector<std::size_t>> leaves;
  std::vector<double> weights;
  for (std::size_t f = 0; f < space.size(); ++f) {
    auto tuple = space.decode(f);
    double w = 1.0;
    for (std::size_t i = 0; i < trees.size(); ++i) w *= trees[i]->leaf_probability(tuple[i]);
    leaves.push_back(tuple);
    weights.push_back(w);
  }
  return canonicalize(std::move(leaves), std::move(weights));
}

}  // namespace testing
