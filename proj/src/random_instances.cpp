#include "causalot/random_instances.hpp"

#include <cmath>
#include <string>

#include "causalot/errors.hpp"

namespace causalot {

namespace {

std::string node_id(int depth, std::size_t index) {
  return "t" + std::to_string(depth) + "n" + std::to_string(index);
}

std::vector<double> random_probs(std::mt19937_64& rng, std::size_t k) {
  std::uniform_real_distribution<double> u(0.2, 1.0);
  std::vector<double> p(k);
  double total = 0.0;
  for (double& v : p) total += (v = u(rng));
  double partial = 0.0;
  for (std::size_t j = 0; j + 1 < k; ++j) partial += (p[j] /= total);
  p[k - 1] = 1.0 - partial;
  return p;
}

}  // namespace

ScenarioTree random_tree(std::mt19937_64& rng, const RandomTreeOptions& opt) {
  if (opt.horizon < 1 || opt.min_branching < 1 || opt.max_branching < opt.min_branching || opt.dim < 1)
    throw ValidationError("invalid random tree options");
  std::uniform_int_distribution<std::size_t> branch(opt.min_branching, opt.max_branching);
  std::uniform_real_distribution<double> value(-opt.value_scale, opt.value_scale);
  const double scale = opt.decimals >= 0 ? std::pow(10.0, opt.decimals) : 0.0;
  auto draw = [&] {
    std::vector<double> x(opt.dim);
    for (double& v : x) {
      v = value(rng);
      if (opt.decimals >= 0) v = std::round(v * scale) / scale;
    }
    return x;
  };

  std::vector<std::vector<TreeNode>> levels(opt.horizon);
  std::size_t parents = 1;
  for (int d = 1; d <= opt.horizon; ++d) {
    for (std::size_t p = 0; p < parents; ++p) {
      const std::size_t k = branch(rng);
      auto probs = random_probs(rng, k);
      for (std::size_t j = 0; j < k; ++j) {
        TreeNode n;
        n.id = node_id(d, levels[d - 1].size());
        n.parent = d == 1 ? -1 : static_cast<std::ptrdiff_t>(p);
        n.prob = probs[j];
        n.value = draw();
        levels[d - 1].push_back(std::move(n));
      }
    }
    parents = levels[d - 1].size();
  }
  return ScenarioTree::from_levels(std::move(levels));
}

ScenarioTree grid_tree(const std::vector<std::vector<double>>& grid) {
  if (grid.empty()) throw ValidationError("grid tree needs at least one time step");
  std::vector<std::vector<TreeNode>> levels(grid.size());
  std::size_t parents = 1;
  for (std::size_t d = 1; d <= grid.size(); ++d) {
    const auto& points = grid[d - 1];
    if (points.empty()) throw ValidationError("empty grid at time " + std::to_string(d));
    const double p = 1.0 / static_cast<double>(points.size());
    for (std::size_t q = 0; q < parents; ++q)
      for (double y : points) {
        TreeNode n;
        n.id = node_id(static_cast<int>(d), levels[d - 1].size());
        n.parent = d == 1 ? -1 : static_cast<std::ptrdiff_t>(q);
        n.prob = p;
        n.value = {y};
        levels[d - 1].push_back(std::move(n));
      }
    parents = levels[d - 1].size();
  }
  return ScenarioTree::from_levels(std::move(levels));
}

}  // namespace causalot
