#include "causalot/path_cost.hpp"

#include <cmath>
#include <memory>
#include <sstream>

#include "causalot/errors.hpp"

namespace causalot {

namespace {

double step_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ValidationError("state dimensions differ between compared paths");
  if (a.size() == 1) return std::abs(a[0] - b[0]);
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

void check_horizon(const Path& x, const Path& y) {
  if (x.size() != y.size()) throw ValidationError("paths of different lengths");
}

std::string format_number(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

double path_distance(const Path& x, const Path& y) {
  check_horizon(x, y);
  double d = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) d += step_distance(x[t], y[t]);
  return d;
}

PathCost lp_sum_cost(double p) {
  if (!(p >= 1.0)) throw ValidationError("lp_sum exponent must be >= 1");
  PathCost c;
  c.name = "lp_sum:" + format_number(p);
  c.eval = [p](std::span<const Path* const> paths) {
    double total = 0.0;
    for (std::size_t i = 0; i < paths.size(); ++i)
      for (std::size_t j = i + 1; j < paths.size(); ++j) {
        const double d = path_distance(*paths[i], *paths[j]);
        total += p == 1.0 ? d : p == 2.0 ? d * d : std::pow(d, p);
      }
    return total;
  };
  return c;
}

PathCost quadratic_cost() {
  PathCost c;
  c.name = "quadratic";
  c.eval = [](std::span<const Path* const> paths) {
    double total = 0.0;
    for (std::size_t i = 0; i < paths.size(); ++i)
      for (std::size_t j = i + 1; j < paths.size(); ++j) {
        check_horizon(*paths[i], *paths[j]);
        for (std::size_t t = 0; t < paths[i]->size(); ++t) {
          const double d = step_distance((*paths[i])[t], (*paths[j])[t]);
          total += d * d;
        }
      }
    return total;
  };
  return c;
}

PathCost parse_path_cost(const std::string& spec) {
  if (spec == "quadratic") return quadratic_cost();
  if (spec == "metric") return lp_sum_cost(1.0);
  const std::string prefix = "lp_sum:";
  if (spec.rfind(prefix, 0) == 0) {
    try {
      std::size_t used = 0;
      const std::string rest = spec.substr(prefix.size());
      double p = std::stod(rest, &used);
      if (used != rest.size()) throw ValidationError("bad exponent");
      return lp_sum_cost(p);
    } catch (const std::logic_error&) {
      throw ValidationError("cannot parse cost spec '" + spec + "'");
    }
  }
  throw ValidationError("unknown cost spec '" + spec + "'");
}

PathCost shifted(PathCost cost, double kappa) {
  PathCost c;
  c.name = cost.name + "+" + format_number(kappa);
  c.eval = [inner = std::move(cost.eval), kappa](std::span<const Path* const> paths) { return inner(paths) + kappa; };
  return c;
}

LeafCost bind_cost(const PathCost& cost, const std::vector<const ScenarioTree*>& trees) {
  return [cost, trees](std::span<const std::size_t> leaves) {
    std::vector<const Path*> paths(trees.size());
    for (std::size_t i = 0; i < trees.size(); ++i) paths[i] = &trees[i]->leaf_path(leaves[i]);
    return cost(paths);
  };
}

LeafCost tensor_cost(CostTensor tensor) {
  auto shared = std::make_shared<const CostTensor>(std::move(tensor));
  return [shared](std::span<const std::size_t> leaves) {
    if (leaves.size() != shared->dims.size()) throw ValidationError("cost tensor rank mismatch");
    for (std::size_t a = 0; a < leaves.size(); ++a)
      if (leaves[a] >= shared->dims[a]) throw ValidationError("cost tensor index out of range");
    return shared->at(leaves);
  };
}

PairCost power_pair_cost(double p, double scale) {
  if (!(p > 0.0)) throw ValidationError("power cost exponent must be positive");
  PairCost c;
  c.name = "power:" + format_number(p);
  c.eval = [p, scale](const Path& x, const Path& y) {
    check_horizon(x, y);
    double total = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
      const double d = step_distance(x[t], y[t]);
      total += p == 2.0 ? d * d : std::pow(d, p);
    }
    return scale * total;
  };
  return c;
}

}  // namespace causalot
