#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "causalot/scenario_tree.hpp"

namespace causalot {

struct RandomTreeOptions {
  int horizon = 2;
  std::size_t min_branching = 1;
  std::size_t max_branching = 3;
  std::size_t dim = 1;
  double value_scale = 2.0;
  /// Round states to this many decimals (negative keeps full precision).
  int decimals = -1;
};

/// Tree with independently drawn branching, transition probabilities
/// bounded away from zero, and uniform states in [-scale, scale]. Ids are
/// "t<depth>n<index>".
ScenarioTree random_tree(std::mt19937_64& rng, const RandomTreeOptions& options);

/// Full product tree whose depth-t states run over grid[t-1]; used as a
/// task support. Probabilities are uniform within each sibling group.
ScenarioTree grid_tree(const std::vector<std::vector<double>>& grid);

}  // namespace causalot
