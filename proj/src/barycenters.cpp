#include "causalot/barycenters.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <numeric>

#include "causalot/causality.hpp"
#include "causalot/errors.hpp"
#include "causalot/quadrature.hpp"
#include "parallel.hpp"

namespace causalot {

namespace {

int shared_horizon(const std::vector<ScenarioTree>& trees) {
  if (trees.empty()) throw ValidationError("at least one tree is required");
  const int h = trees[0].horizon();
  for (const auto& t : trees)
    if (t.horizon() != h) throw ValidationError("trees have different horizons");
  return h;
}

std::size_t find_state(const std::vector<std::vector<double>>& grid, std::span<const double> x) {
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (grid[k].size() != x.size()) continue;
    bool same = true;
    for (std::size_t d = 0; d < x.size() && same; ++d) same = std::abs(grid[k][d] - x[d]) <= 1e-12;
    if (same) return k;
  }
  throw ValidationError("state not found in cost table grid");
}

// Fills the test-function coefficient blocks of `cert` for the constrained
// coordinates of `family` from LP duals starting at `offset`.
void fill_coefficients(DualCertificate& cert, const CausalityFamily& family,
                       const std::vector<const ScenarioTree*>& trees, const std::vector<std::size_t>& constrained,
                       const std::vector<double>& duals, std::size_t offset) {
  const int horizon = trees.front()->horizon();
  const std::size_t n = trees.size();
  for (std::size_t i : constrained) {
    for (int t = 2; t <= horizon; ++t) {
      DualCertificate::Block blk;
      blk.process = i;
      blk.step_time = t;
      std::vector<std::size_t> dims;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        blk.other_coords.push_back(j);
        dims.push_back(trees[j]->level_size(t - 1));
      }
      blk.others = TupleSpace(std::move(dims));
      blk.coefficients.assign(blk.others.size() * trees[i]->level_size(t), 0.0);
      cert.blocks.push_back(std::move(blk));
    }
  }
  for (std::size_t f = 0; f < family.num_functions(); ++f) {
    CausalityKey key = family.key(f);
    std::size_t slot = 0;
    while (cert.blocks[slot].process != key.coord || cert.blocks[slot].step_time != key.step_time) ++slot;
    auto& blk = cert.blocks[slot];
    const std::size_t width = trees[key.coord]->level_size(key.step_time);
    blk.coefficients[blk.others.encode(key.others) * width + key.own] = -duals[offset + f];
  }
}

CausalOtResult pair_lp(const ScenarioTree& x, const ScenarioTree& y, const PairCost& cost,
                       const std::vector<std::size_t>& constrained, std::size_t budget) {
  if (x.horizon() != y.horizon()) throw ValidationError("trees have different horizons");
  const std::size_t lx = x.num_leaves();
  const std::size_t ly = y.num_leaves();
  if (lx > budget / ly) throw BudgetExceeded("leaf-pair count exceeds budget " + std::to_string(budget));
  std::vector<const ScenarioTree*> trees{&x, &y};
  CausalityFamily family(trees, constrained, true);
  LpProblem lp;
  lp.rows.resize(lx + ly + family.num_functions());
  for (std::size_t a = 0; a < lx; ++a) lp.rows[a].rhs = x.leaf_probability(a);
  for (std::size_t b = 0; b < ly; ++b) lp.rows[lx + b].rhs = y.leaf_probability(b);
  std::size_t tuple[2];
  for (std::size_t a = 0; a < lx; ++a)
    for (std::size_t b = 0; b < ly; ++b) {
      const std::size_t v = lp.add_var(cost(x.leaf_path(a), y.leaf_path(b)));
      lp.rows[a].terms.emplace_back(v, 1.0);
      lp.rows[lx + b].terms.emplace_back(v, 1.0);
      tuple[0] = a;
      tuple[1] = b;
      family.for_each_term(std::span<const std::size_t>(tuple, 2),
                           [&](std::size_t f, double c) { lp.rows[lx + ly + f].terms.emplace_back(v, c); });
    }
  CausalOtResult out;
  out.lp = solve_lp_checked(lp);
  out.value = out.lp.objective;
  out.plan.marginals = {x.leaf_law(), y.leaf_law()};
  for (std::size_t a = 0; a < lx; ++a)
    for (std::size_t b = 0; b < ly; ++b) {
      const double w = out.lp.x[a * ly + b];
      if (w > 0.0) {
        out.plan.atoms.push_back({a, b});
        out.plan.weights.push_back(w);
      }
    }
  return out;
}

}  // namespace

SeparableCost SeparableCost::power(double p, std::vector<double> weights, int horizon) {
  if (!(p > 0.0)) throw ValidationError("power cost exponent must be positive");
  if (horizon < 1) throw ValidationError("power cost needs horizon >= 1");
  for (double w : weights)
    if (!(w > 0.0)) throw ValidationError("power cost weights must be positive");
  SeparableCost c;
  c.processes = weights.size();
  c.horizon = horizon;
  c.lower_bounds.assign(weights.size(), std::vector<double>(horizon, 0.0));
  c.description = "power:" + std::to_string(p);
  c.term = [p, weights](std::size_t i, int, std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ValidationError("state dimensions differ between process and task");
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double d = std::abs(x[k] - y[k]);
      s += p == 2.0 ? d * d : p == 1.0 ? d : std::pow(d, p);
    }
    return weights.at(i) * s;
  };
  return c;
}

SeparableCost SeparableCost::tables(std::vector<std::vector<Table>> tables) {
  if (tables.empty() || tables[0].empty()) throw ValidationError("cost tables are empty");
  SeparableCost c;
  c.processes = tables.size();
  c.horizon = static_cast<int>(tables[0].size());
  c.description = "tables";
  for (const auto& per_time : tables) {
    if (static_cast<int>(per_time.size()) != c.horizon) throw ValidationError("cost tables have different horizons");
    std::vector<double> bounds;
    for (const Table& tab : per_time) {
      if (tab.values.size() != tab.x_grid.size()) throw ValidationError("cost table rows do not match x grid");
      double lo = std::numeric_limits<double>::infinity();
      for (const auto& row : tab.values) {
        if (row.size() != tab.y_grid.size()) throw ValidationError("cost table columns do not match y grid");
        for (double v : row) {
          if (!std::isfinite(v)) throw ValidationError("non-finite cost table entry");
          lo = std::min(lo, v);
        }
      }
      bounds.push_back(lo);
    }
    c.lower_bounds.push_back(std::move(bounds));
  }
  auto shared = std::make_shared<const std::vector<std::vector<Table>>>(std::move(tables));
  c.term = [shared](std::size_t i, int t, std::span<const double> x, std::span<const double> y) {
    const Table& tab = shared->at(i).at(t - 1);
    return tab.values[find_state(tab.x_grid, x)][find_state(tab.y_grid, y)];
  };
  return c;
}

double SeparableCost::path(std::size_t i, const Path& x, const Path& y) const {
  if (x.size() != y.size() || static_cast<int>(x.size()) != horizon)
    throw ValidationError("path length differs from the cost horizon");
  double s = 0.0;
  for (int t = 1; t <= horizon; ++t) s += term(i, t, x[t - 1], y[t - 1]);
  return s;
}

PairCost SeparableCost::pair(std::size_t i) const {
  if (i >= processes) throw ValidationError("cost has no process " + std::to_string(i));
  PairCost c;
  c.name = description + "[" + std::to_string(i) + "]";
  c.eval = [self = *this, i](const Path& x, const Path& y) { return self.path(i, x, y); };
  return c;
}

std::vector<double> Phi0Selector::select(int t, std::span<const std::vector<double>* const> xs,
                                         const SeparableCost& cost) const {
  if (mode == Mode::closed_form) {
    if (weights.size() != xs.size()) throw ValidationError("selector weights do not match the processes");
    std::vector<double> y(xs[0]->size(), 0.0);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (xs[i]->size() != y.size()) throw ValidationError("state dimensions differ across processes");
      for (std::size_t d = 0; d < y.size(); ++d) y[d] += weights[i] * (*xs[i])[d];
    }
    return y;
  }
  if (t < 1 || static_cast<std::size_t>(t) > grid.size()) throw ValidationError("selector grid does not cover time " + std::to_string(t));
  const auto& cands = grid[t - 1];
  std::size_t best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < cands.size(); ++k) {
    double v = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) v += cost.step(i, t, *xs[i], cands[k]);
    if (v < best_val) {
      best_val = v;
      best = k;
    }
  }
  return cands[best];
}

Phi0Selector phi0_quadratic(std::vector<double> weights) {
  if (weights.empty()) throw ValidationError("selector needs at least one weight");
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw ValidationError("selector weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ValidationError("selector weights must sum to 1");
  Phi0Selector s;
  s.mode = Phi0Selector::Mode::closed_form;
  s.weights = std::move(weights);
  return s;
}

Phi0Selector phi0_grid(std::vector<std::vector<std::vector<double>>> grid, double epsilon) {
  if (grid.empty()) throw ValidationError("selector grid is empty");
  for (const auto& g : grid)
    if (g.empty()) throw ValidationError("selector grid has an empty time step");
  if (!(epsilon >= 0.0)) throw ValidationError("selector epsilon must be >= 0");
  Phi0Selector s;
  s.mode = Phi0Selector::Mode::grid;
  s.grid = std::move(grid);
  s.epsilon = epsilon;
  return s;
}

PathCost aggregate_cost(const SeparableCost& cost, const Phi0Selector& selector) {
  if (selector.mode == Phi0Selector::Mode::grid && static_cast<int>(selector.grid.size()) != cost.horizon)
    throw ValidationError("selector and cost cover different horizons");
  if (selector.mode == Phi0Selector::Mode::closed_form && selector.weights.size() != cost.processes)
    throw ValidationError("selector and cost cover different numbers of processes");
  PathCost c;
  c.name = "aggregate(" + cost.description + ")";
  c.eval = [cost, selector](std::span<const Path* const> paths) {
    if (paths.size() != cost.processes) throw ValidationError("aggregate cost applied to the wrong number of paths");
    double total = 0.0;
    std::vector<const std::vector<double>*> xs(paths.size());
    for (int t = 1; t <= cost.horizon; ++t) {
      for (std::size_t i = 0; i < paths.size(); ++i) xs[i] = &(*paths[i]).at(t - 1);
      const std::vector<double> y = selector.select(t, xs, cost);
      for (std::size_t i = 0; i < paths.size(); ++i) total += cost.step(i, t, *xs[i], y);
    }
    return total;
  };
  return c;
}

BicausalBarycenter bc_barycenter(const std::vector<ScenarioTree>& trees, const SeparableCost& cost,
                                 const Phi0Selector& selector, std::size_t budget) {
  const int horizon = shared_horizon(trees);
  if (cost.processes != trees.size() || cost.horizon != horizon)
    throw ValidationError("separable cost does not match the trees");
  auto ptrs = pointers(trees);
  BicausalBarycenter out;
  out.dpp = mc_dpp(ptrs, bind_cost(aggregate_cost(cost, selector), ptrs), budget);
  out.value = out.dpp.value;
  out.coupling = assemble_coupling(out.dpp.policy, ptrs);

  const std::size_t n = trees.size();
  std::vector<std::map<std::vector<std::size_t>, double>> mass(horizon);
  for (std::size_t k = 0; k < out.coupling.size(); ++k) {
    for (int t = 1; t <= horizon; ++t) {
      std::vector<std::size_t> nodes(n);
      for (std::size_t i = 0; i < n; ++i) nodes[i] = trees[i].ancestor(horizon, out.coupling.leaves[k][i], t);
      mass[t - 1][nodes] += out.coupling.weights[k];
    }
  }
  std::vector<std::vector<TreeNode>> levels(horizon);
  out.process.members.resize(horizon);
  std::vector<std::map<std::vector<std::size_t>, std::size_t>> position(horizon);
  for (int t = 1; t <= horizon; ++t) {
    for (const auto& [nodes, m] : mass[t - 1]) {
      TreeNode node;
      std::vector<const std::vector<double>*> xs(n);
      for (std::size_t i = 0; i < n; ++i) {
        if (i) node.id += "|";
        node.id += trees[i].node(t, nodes[i]).id;
        xs[i] = &trees[i].node(t, nodes[i]).value;
      }
      node.value = selector.select(t, xs, cost);
      if (t == 1) {
        node.prob = m;
      } else {
        std::vector<std::size_t> up(n);
        for (std::size_t i = 0; i < n; ++i) up[i] = static_cast<std::size_t>(trees[i].node(t, nodes[i]).parent);
        node.parent = static_cast<std::ptrdiff_t>(position[t - 2].at(up));
        node.prob = m / mass[t - 2].at(up);
      }
      position[t - 1][nodes] = levels[t - 1].size();
      levels[t - 1].push_back(std::move(node));
      out.process.members[t - 1].push_back(nodes);
    }
  }
  out.process.tree = ScenarioTree::from_levels(std::move(levels));
  return out;
}

double bc_bary_value(const std::vector<ScenarioTree>& trees, const SeparableCost& cost, const ScenarioTree& candidate,
                     std::size_t budget) {
  const int horizon = shared_horizon(trees);
  if (candidate.horizon() != horizon) throw ValidationError("candidate horizon differs from the inputs");
  if (cost.processes != trees.size()) throw ValidationError("separable cost does not match the trees");
  std::vector<double> parts(trees.size(), 0.0);
  detail::parallel_for(trees.size(), [&](std::size_t i) {
    std::vector<const ScenarioTree*> pair{&trees[i], &candidate};
    LeafCost lc = [&](std::span<const std::size_t> leaves) {
      return cost.path(i, trees[i].leaf_path(leaves[0]), candidate.leaf_path(leaves[1]));
    };
    parts[i] = mc_dpp(pair, lc, budget).value;
  });
  double total = 0.0;
  for (double v : parts) total += v;
  return total;
}

CausalOtResult causal_ot(const ScenarioTree& x, const ScenarioTree& y, const PairCost& cost, std::size_t budget) {
  return pair_lp(x, y, cost, {0}, budget);
}

CausalOtResult bicausal_ot(const ScenarioTree& x, const ScenarioTree& y, const PairCost& cost, std::size_t budget) {
  return pair_lp(x, y, cost, {0, 1}, budget);
}

CausalBarycenterSolution causal_barycenter(const std::vector<ScenarioTree>& trees, const ScenarioTree& tasks,
                                           const std::vector<PairCost>& costs, std::size_t budget) {
  const int horizon = shared_horizon(trees);
  if (tasks.horizon() != horizon) throw ValidationError("task tree horizon differs from the inputs");
  if (costs.size() != trees.size()) throw ValidationError("one cost per process is required");
  const std::size_t n = trees.size();
  const std::size_t ly = tasks.num_leaves();
  std::size_t total = ly;
  for (const auto& t : trees) {
    if (t.num_leaves() > (budget - std::min(budget, total)) / ly)
      throw BudgetExceeded("barycenter LP variable count exceeds budget " + std::to_string(budget));
    total += t.num_leaves() * ly;
  }

  LpProblem lp;
  for (std::size_t y = 0; y < ly; ++y) lp.add_var(0.0);
  std::vector<std::size_t> var_base(n), row_first(n), row_second(n), row_causal(n);
  std::vector<std::unique_ptr<CausalityFamily>> families;
  std::vector<std::vector<const ScenarioTree*>> pairs(n);
  for (std::size_t i = 0; i < n; ++i) {
    pairs[i] = {&trees[i], &tasks};
    families.push_back(std::make_unique<CausalityFamily>(pairs[i], std::vector<std::size_t>{0}, true));
    const std::size_t lx = trees[i].num_leaves();
    row_first[i] = lp.rows.size();
    row_second[i] = row_first[i] + lx;
    row_causal[i] = row_second[i] + ly;
    lp.rows.resize(row_causal[i] + families[i]->num_functions());
    for (std::size_t a = 0; a < lx; ++a) lp.rows[row_first[i] + a].rhs = trees[i].leaf_probability(a);
    for (std::size_t y = 0; y < ly; ++y) lp.rows[row_second[i] + y].terms.emplace_back(y, -1.0);
    var_base[i] = lp.num_vars();
    std::size_t tuple[2];
    for (std::size_t a = 0; a < lx; ++a)
      for (std::size_t y = 0; y < ly; ++y) {
        const double c = costs[i](trees[i].leaf_path(a), tasks.leaf_path(y));
        if (!std::isfinite(c)) throw ValidationError("cost is not finite on a (path, task) pair");
        const std::size_t v = lp.add_var(c);
        lp.rows[row_first[i] + a].terms.emplace_back(v, 1.0);
        lp.rows[row_second[i] + y].terms.emplace_back(v, 1.0);
        tuple[0] = a;
        tuple[1] = y;
        families[i]->for_each_term(std::span<const std::size_t>(tuple, 2), [&](std::size_t f, double coef) {
          lp.rows[row_causal[i] + f].terms.emplace_back(v, coef);
        });
      }
  }

  CausalBarycenterSolution out;
  out.lp = solve_lp_checked(lp);
  out.value = out.lp.objective;
  for (std::size_t y = 0; y < ly; ++y) {
    out.nu.support.push_back(y);
    out.nu.weights.push_back(out.lp.x[y]);
  }
  out.f.resize(n);
  out.g.resize(n);
  out.coefficients.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lx = trees[i].num_leaves();
    TransportPlan plan;
    plan.marginals = {trees[i].leaf_law(), out.nu};
    for (std::size_t a = 0; a < lx; ++a)
      for (std::size_t y = 0; y < ly; ++y) {
        const double w = out.lp.x[var_base[i] + a * ly + y];
        if (w > 0.0) {
          plan.atoms.push_back({a, y});
          plan.weights.push_back(w);
        }
      }
    out.plans.push_back(std::move(plan));
    out.f[i].assign(out.lp.duals.begin() + row_first[i], out.lp.duals.begin() + row_first[i] + lx);
    out.g[i].assign(out.lp.duals.begin() + row_second[i], out.lp.duals.begin() + row_second[i] + ly);
    DualCertificate& cert = out.coefficients[i];
    cert.potentials = {out.f[i], out.g[i]};
    fill_coefficients(cert, *families[i], pairs[i], {0}, out.lp.duals, row_causal[i]);
    for (std::size_t a = 0; a < lx; ++a) out.dual_value += out.f[i][a] * trees[i].leaf_probability(a);
  }
  // Clearing: the LP only yields sum_i g^i >= 0; lowering g^0 to minus the
  // others' sum keeps dual feasibility and makes the sum vanish.
  for (std::size_t y = 0; y < ly; ++y) {
    double rest = 0.0;
    for (std::size_t i = 1; i < n; ++i) rest += out.g[i][y];
    out.g[0][y] = -rest;
  }
  out.coefficients[0].potentials[1] = out.g[0];
  return out;
}

CausalDualCheck check_causal_dual(const CausalBarycenterSolution& sol, const std::vector<ScenarioTree>& trees,
                                  const ScenarioTree& tasks, const std::vector<PairCost>& costs) {
  CausalDualCheck out;
  out.min_slack = std::numeric_limits<double>::infinity();
  const std::size_t ly = tasks.num_leaves();
  for (std::size_t i = 0; i < trees.size(); ++i) {
    std::vector<const ScenarioTree*> pair{&trees[i], &tasks};
    std::vector<double> slack(trees[i].num_leaves() * ly);
    std::size_t tuple[2];
    for (std::size_t a = 0; a < trees[i].num_leaves(); ++a) {
      out.dual_value += sol.f[i][a] * trees[i].leaf_probability(a);
      for (std::size_t y = 0; y < ly; ++y) {
        tuple[0] = a;
        tuple[1] = y;
        const double s = costs[i](trees[i].leaf_path(a), tasks.leaf_path(y)) +
                         sol.coefficients[i].martingale_term(pair, std::span<const std::size_t>(tuple, 2)) -
                         sol.f[i][a] - sol.g[i][y];
        slack[a * ly + y] = s;
        out.min_slack = std::min(out.min_slack, s);
      }
    }
    for (const auto& atom : sol.plans[i].atoms)
      out.support_slack = std::max(out.support_slack, std::abs(slack[atom[0] * ly + atom[1]]));
  }
  for (std::size_t y = 0; y < ly; ++y) {
    double rest = 0.0;
    for (std::size_t i = 1; i < trees.size(); ++i) rest += sol.g[i][y];
    out.clearing = std::max(out.clearing, std::abs(sol.g[0][y] + rest));
  }
  return out;
}

AnticausalBarycenter anticausal_barycenter(const std::vector<ScenarioTree>& trees, const std::vector<PairCost>& costs,
                                           const ScenarioTree& support) {
  const int horizon = shared_horizon(trees);
  if (support.horizon() != horizon) throw ValidationError("support horizon differs from the inputs");
  if (costs.size() != trees.size()) throw ValidationError("one cost per process is required");
  const std::size_t ly = support.num_leaves();
  std::vector<DiscreteDistribution> measures;
  std::vector<std::vector<std::vector<double>>> cost_mats(trees.size());
  for (std::size_t i = 0; i < trees.size(); ++i) {
    measures.push_back(trees[i].leaf_law());
    cost_mats[i].assign(ly, std::vector<double>(trees[i].num_leaves()));
    for (std::size_t y = 0; y < ly; ++y)
      for (std::size_t a = 0; a < trees[i].num_leaves(); ++a)
        cost_mats[i][y][a] = costs[i](trees[i].leaf_path(a), support.leaf_path(y));
  }
  FixedSupportBarycenter bary =
      detail::barycenter_lp(measures, std::vector<double>(trees.size(), 1.0), cost_mats, ly);

  AnticausalBarycenter out;
  out.value = bary.value;
  out.nu = bary.nu;
  out.f = bary.f;
  out.g = bary.g;
  out.dual_value = bary.dual_value;
  out.kernels.resize(trees.size());
  for (std::size_t i = 0; i < trees.size(); ++i) {
    TransportPlan plan;
    plan.marginals = {measures[i], out.nu};
    std::vector<std::vector<std::pair<std::size_t, double>>> by_task(ly);
    for (std::size_t k = 0; k < bary.plans[i].atoms.size(); ++k) {
      const std::size_t y = bary.plans[i].atoms[k][0];
      const std::size_t a = bary.plans[i].atoms[k][1];
      by_task[y].emplace_back(a, bary.plans[i].weights[k]);
    }
    std::vector<std::pair<std::vector<std::size_t>, double>> atoms;
    for (std::size_t y = 0; y < ly; ++y)
      for (auto [a, w] : by_task[y]) atoms.push_back({{a, y}, w});
    std::sort(atoms.begin(), atoms.end());
    for (auto& [atom, w] : atoms) {
      plan.atoms.push_back(atom);
      plan.weights.push_back(w);
    }
    out.plans.push_back(std::move(plan));
    out.kernels[i].resize(ly);
    for (std::size_t y = 0; y < ly; ++y) {
      const double m = out.nu.weights[y];
      if (!(m > 0.0)) continue;
      for (auto [a, w] : by_task[y]) {
        out.kernels[i][y].support.push_back(a);
        out.kernels[i][y].weights.push_back(w / m);
      }
    }
  }
  return out;
}

std::vector<ScenarioTree> counterexample_trees(int n_quant) {
  if (n_quant < 1) throw ValidationError("quantization needs n >= 1");
  Quantization q = quantize_gauss_hermite(n_quant);
  std::vector<std::vector<TreeNode>> x1(2), x2(2);
  TreeNode origin;
  origin.id = "o";
  origin.prob = 1.0;
  origin.value = {0.0};
  x2[0].push_back(origin);
  for (int k = 0; k < n_quant; ++k) {
    const double z = q.nodes[k];
    const std::string tag = std::to_string(k);
    TreeNode a;
    a.id = "y" + tag;
    a.prob = q.weights[k];
    a.value = {z};
    x1[0].push_back(a);
    TreeNode b;
    b.id = "y" + tag + "c";
    b.parent = k;
    b.prob = 1.0;
    b.value = {z * z * z};
    x1[1].push_back(b);
    TreeNode c;
    c.id = "c" + tag;
    c.parent = 0;
    c.prob = q.weights[k];
    c.value = {z * z * z};
    x2[1].push_back(c);
  }
  return {ScenarioTree::from_levels(std::move(x1)), ScenarioTree::from_levels(std::move(x2))};
}

CounterexampleReport counterexample_demo(int n_quant) {
  if (n_quant < 4) throw ValidationError("counterexample needs n_quant >= 4 for moment exactness");
  CounterexampleReport r;
  r.n_quant = n_quant;
  Quantization q = quantize_gauss_hermite(n_quant);
  for (int k = 0; k < n_quant; ++k) {
    const double z2 = q.nodes[k] * q.nodes[k];
    r.moment2 += q.weights[k] * z2;
    r.moment6 += q.weights[k] * z2 * z2 * z2;
  }
  std::vector<ScenarioTree> trees = counterexample_trees(n_quant);
  SeparableCost half_sq = SeparableCost::power(2.0, {0.5, 0.5}, 2);

  Phi0Selector sum_map;
  sum_map.mode = Phi0Selector::Mode::closed_form;
  sum_map.weights = {1.0, 1.0};
  const PathCost literal = aggregate_cost(half_sq, sum_map);
  const PathCost stationary = aggregate_cost(half_sq, phi0_quadratic({0.5, 0.5}));
  for (std::size_t a = 0; a < trees[0].num_leaves(); ++a)
    for (std::size_t b = 0; b < trees[1].num_leaves(); ++b) {
      const double w = trees[0].leaf_probability(a) * trees[1].leaf_probability(b);
      const Path* paths[2] = {&trees[0].leaf_path(a), &trees[1].leaf_path(b)};
      r.cost_phi0_construction += w * literal(paths);
      r.cost_phi0_stationary += w * stationary(paths);
    }

  const ScenarioTree& candidate = trees[1];
  for (std::size_t i = 0; i < 2; ++i) {
    CausalOtResult res = causal_ot(trees[i], candidate, power_pair_cost(2.0, 0.5));
    const double v = res.value;
    r.candidate_terms.push_back(v);
    r.candidate_gaps.push_back(res.lp.gap);
    r.cost_canonical_candidate += v;
  }
  return r;
}

}  // namespace causalot
