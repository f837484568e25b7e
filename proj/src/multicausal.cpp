#include "causalot/multicausal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "causalot/errors.hpp"
#include "parallel.hpp"

namespace causalot {

namespace {

int common_horizon(const std::vector<const ScenarioTree*>& trees) {
  if (trees.empty()) throw ValidationError("at least one tree is required");
  const int horizon = trees[0]->horizon();
  for (const ScenarioTree* t : trees)
    if (t->horizon() != horizon) throw ValidationError("trees have different horizons");
  return horizon;
}

TupleSpace leaf_space(const std::vector<const ScenarioTree*>& trees, std::size_t budget) {
  std::vector<std::size_t> dims;
  std::size_t total = 1;
  for (const ScenarioTree* t : trees) {
    const std::size_t l = t->num_leaves();
    if (total > budget / l) throw BudgetExceeded("leaf-tuple count exceeds budget " + std::to_string(budget));
    total *= l;
    dims.push_back(l);
  }
  return TupleSpace(std::move(dims));
}

TupleSpace level_space(const std::vector<const ScenarioTree*>& trees, int depth) {
  std::vector<std::size_t> dims;
  if (depth > 0)
    for (const ScenarioTree* t : trees) dims.push_back(t->level_size(depth));
  return TupleSpace(std::move(dims));
}

void pin_potentials(std::vector<std::vector<double>>& f) {
  if (f.empty()) return;
  double shift = 0.0;
  for (std::size_t i = 0; i + 1 < f.size(); ++i) {
    const double d = f[i][0];
    for (double& v : f[i]) v -= d;
    shift += d;
  }
  for (double& v : f.back()) v += shift;
}

}  // namespace

std::vector<const ScenarioTree*> pointers(const std::vector<ScenarioTree>& trees) {
  std::vector<const ScenarioTree*> out;
  for (const auto& t : trees) out.push_back(&t);
  return out;
}

std::vector<double> MulticausalCoupling::marginal(std::size_t i, std::size_t num_leaves) const {
  std::vector<double> out(num_leaves, 0.0);
  for (std::size_t k = 0; k < leaves.size(); ++k) out.at(leaves[k].at(i)) += weights[k];
  return out;
}

double MulticausalCoupling::expectation(const LeafCost& cost) const {
  double s = 0.0;
  for (std::size_t k = 0; k < leaves.size(); ++k) s += weights[k] * cost(leaves[k]);
  return s;
}

MulticausalCoupling canonicalize(std::vector<std::vector<std::size_t>> leaves, std::vector<double> weights) {
  std::map<std::vector<std::size_t>, double> merged;
  for (std::size_t k = 0; k < leaves.size(); ++k)
    if (weights[k] > 0.0) merged[std::move(leaves[k])] += weights[k];
  MulticausalCoupling out;
  for (auto& [tuple, w] : merged) {
    out.leaves.push_back(tuple);
    out.weights.push_back(w);
  }
  return out;
}

double DualCertificate::potential_sum(std::span<const std::size_t> leaves) const {
  double s = 0.0;
  for (std::size_t i = 0; i < potentials.size(); ++i) s += potentials[i][leaves[i]];
  return s;
}

double DualCertificate::martingale_term(const std::vector<const ScenarioTree*>& trees,
                                        std::span<const std::size_t> leaves) const {
  const int horizon = trees.front()->horizon();
  double total = 0.0;
  std::vector<std::size_t> others;
  for (const Block& blk : blocks) {
    const int t = blk.step_time;
    others.resize(blk.other_coords.size());
    for (std::size_t k = 0; k < blk.other_coords.size(); ++k)
      others[k] = trees[blk.other_coords[k]]->ancestor(horizon, leaves[blk.other_coords[k]], t - 1);
    const ScenarioTree& tree = *trees[blk.process];
    const std::size_t width = tree.level_size(t);
    const std::size_t row = blk.others.encode(others) * width;
    const std::size_t b = tree.ancestor(horizon, leaves[blk.process], t);
    const std::size_t p = static_cast<std::size_t>(tree.node(t, b).parent);
    double term = blk.coefficients[row + b];
    for (std::size_t c : tree.children(t - 1, p)) term -= tree.node(t, c).prob * blk.coefficients[row + c];
    total += term;
  }
  return total;
}

DualCheck check_certificate(const DualCertificate& cert, const std::vector<const ScenarioTree*>& trees,
                            const LeafCost& cost, const MulticausalCoupling& coupling, std::size_t budget) {
  common_horizon(trees);
  TupleSpace space = leaf_space(trees, budget);
  DualCheck out;
  for (std::size_t i = 0; i < trees.size(); ++i)
    for (std::size_t l = 0; l < trees[i]->num_leaves(); ++l)
      out.dual_value += cert.potentials.at(i).at(l) * trees[i]->leaf_probability(l);
  out.min_slack = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> tuple(trees.size());
  for (std::size_t v = 0; v < space.size(); ++v) {
    space.decode(v, tuple);
    const double slack = cost(tuple) + cert.martingale_term(trees, tuple) - cert.potential_sum(tuple);
    out.min_slack = std::min(out.min_slack, slack);
  }
  double integral = 0.0;
  for (std::size_t k = 0; k < coupling.size(); ++k)
    integral += coupling.weights[k] * cert.martingale_term(trees, coupling.leaves[k]);
  out.martingale_integral = std::abs(integral);
  return out;
}

DppResult mc_dpp(const std::vector<const ScenarioTree*>& trees, const LeafCost& cost, std::size_t budget) {
  const int horizon = common_horizon(trees);
  leaf_space(trees, budget);
  const std::size_t n = trees.size();

  DppResult out;
  auto policy = std::make_shared<KernelPolicy>();
  out.values.spaces.resize(horizon + 1);
  out.values.values.resize(horizon + 1);
  policy->spaces.resize(horizon);
  policy->plans.resize(horizon);
  policy->potentials.resize(horizon);
  for (int t = 0; t <= horizon; ++t) {
    out.values.spaces[t] = level_space(trees, t);
    out.values.values[t].assign(out.values.spaces[t].size(), 0.0);
    if (t < horizon) policy->spaces[t] = out.values.spaces[t];
  }

  {
    const TupleSpace& space = out.values.spaces[horizon];
    auto& terminal = out.values.values[horizon];
    detail::parallel_for(space.size(), [&](std::size_t v) {
      std::vector<std::size_t> tuple = space.decode(v);
      const double c = cost(tuple);
      if (!std::isfinite(c)) throw ValidationError("cost is not finite on a leaf tuple");
      terminal[v] = c;
    });
  }

  for (int t = horizon - 1; t >= 0; --t) {
    const TupleSpace& space = out.values.spaces[t];
    const TupleSpace& next_space = out.values.spaces[t + 1];
    const auto& next = out.values.values[t + 1];
    auto& current = out.values.values[t];
    auto& plans = policy->plans[t];
    plans.assign(space.size(), TransportPlan{});
    auto& potentials = policy->potentials[t];
    potentials.assign(space.size(), {});
    std::vector<double> gaps(space.size(), 0.0);
    std::vector<std::size_t> iters(space.size(), 0);
    detail::parallel_for(space.size(), [&](std::size_t v) {
      std::vector<std::size_t> nodes = space.decode(v);
      std::vector<DiscreteDistribution> marginals(n);
      CostTensor tensor;
      for (std::size_t i = 0; i < n; ++i) {
        auto kids = trees[i]->children(t, t == 0 ? 0 : nodes[i]);
        for (std::size_t c : kids) {
          marginals[i].support.push_back(c);
          marginals[i].weights.push_back(trees[i]->node(t + 1, c).prob);
        }
        tensor.dims.push_back(kids.size());
      }
      TupleSpace local(tensor.dims);
      tensor.data.resize(local.size());
      std::vector<std::size_t> pos(n), child(n);
      for (std::size_t k = 0; k < local.size(); ++k) {
        local.decode(k, pos);
        for (std::size_t i = 0; i < n; ++i) child[i] = marginals[i].support[pos[i]];
        tensor.data[k] = next[next_space.encode(child)];
      }
      MultimarginalResult r = multimarginal_ot(marginals, tensor);
      r.plan.time = t + 1;
      current[v] = r.value;
      gaps[v] = r.dual_gap;
      iters[v] = r.iterations;
      plans[v] = std::move(r.plan);
      potentials[v] = std::move(r.duals);
    });
    out.lp_solves += space.size();
    out.lp_iterations += std::accumulate(iters.begin(), iters.end(), std::size_t{0});
    for (double g : gaps) out.max_inner_gap = std::max(out.max_inner_gap, g);
  }
  out.value = out.values.root();
  out.policy = std::move(policy);
  return out;
}

DppResult mc_dpp(const std::vector<ScenarioTree>& trees, const PathCost& cost, std::size_t budget) {
  auto ptrs = pointers(trees);
  return mc_dpp(ptrs, bind_cost(cost, ptrs), budget);
}

DualCertificate dpp_certificate(const DppResult& dpp, const std::vector<const ScenarioTree*>& trees) {
  const int horizon = common_horizon(trees);
  if (!dpp.policy) throw ValidationError("DPP result has no policy");
  const KernelPolicy& pol = *dpp.policy;
  const std::size_t n = trees.size();
  DualCertificate cert;
  cert.potentials.resize(n);
  const auto& first = pol.potentials.at(0).at(0);
  for (std::size_t i = 0; i < n; ++i) {
    const ScenarioTree& tree = *trees[i];
    cert.potentials[i].resize(tree.num_leaves());
    for (std::size_t l = 0; l < tree.num_leaves(); ++l) {
      const std::size_t root = tree.ancestor(horizon, l, 1);
      cert.potentials[i][l] = first[i][root];
    }
    auto law = tree.leaf_law();
    for (std::size_t l = 0; l < tree.num_leaves(); ++l) cert.dual_value += law.weights[l] * cert.potentials[i][l];
  }
  // Position of each node among its siblings.
  std::vector<std::vector<std::vector<std::size_t>>> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    rank[i].resize(horizon + 1);
    for (int t = 1; t <= horizon; ++t) {
      rank[i][t].assign(trees[i]->level_size(t), 0);
      for (std::size_t p = 0; p < (t == 1 ? 1 : trees[i]->level_size(t - 1)); ++p) {
        auto kids = trees[i]->children(t - 1, p);
        for (std::size_t k = 0; k < kids.size(); ++k) rank[i][t][kids[k]] = k;
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
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
      const std::size_t width = trees[i]->level_size(t);
      blk.coefficients.assign(blk.others.size() * width, 0.0);
      std::vector<std::size_t> others(blk.other_coords.size()), tuple(n);
      for (std::size_t a = 0; a < blk.others.size(); ++a) {
        blk.others.decode(a, others);
        for (std::size_t k = 0; k < others.size(); ++k) tuple[blk.other_coords[k]] = others[k];
        for (std::size_t b = 0; b < width; ++b) {
          tuple[i] = static_cast<std::size_t>(trees[i]->node(t, b).parent);
          const auto& phi = pol.potentials.at(t - 1).at(pol.spaces.at(t - 1).encode(tuple));
          blk.coefficients[a * width + b] = -phi[i][rank[i][t][b]];
        }
      }
      cert.blocks.push_back(std::move(blk));
    }
  }
  return cert;
}

MulticausalCoupling assemble_coupling(std::shared_ptr<const KernelPolicy> policy,
                                      const std::vector<const ScenarioTree*>& trees) {
  if (!policy) throw ValidationError("incomplete policy: none supplied");
  const int horizon = common_horizon(trees);
  if (static_cast<int>(policy->plans.size()) != horizon || static_cast<int>(policy->spaces.size()) != horizon)
    throw ValidationError("incomplete policy: wrong number of time slices");
  for (int t = 0; t < horizon; ++t) {
    const TupleSpace expected = level_space(trees, t);
    if (policy->spaces[t].dims() != expected.dims() || policy->plans[t].size() != expected.size())
      throw ValidationError("incomplete policy: slice " + std::to_string(t) + " does not match the trees");
  }
  const std::size_t n = trees.size();
  std::vector<std::vector<std::size_t>> leaves;
  std::vector<double> weights;
  std::vector<std::size_t> nodes;

  auto recurse = [&](auto&& self, int t, const std::vector<std::size_t>& at, double w) -> void {
    if (t == horizon) {
      leaves.push_back(at);
      weights.push_back(w);
      return;
    }
    const TransportPlan& plan = policy->plans[t][policy->spaces[t].encode(at)];
    if (plan.atoms.empty() || plan.arity() != n)
      throw ValidationError("incomplete policy: missing plan at depth " + std::to_string(t));
    std::vector<std::size_t> child(n);
    for (std::size_t k = 0; k < plan.atoms.size(); ++k) {
      for (std::size_t i = 0; i < n; ++i) child[i] = plan.marginals[i].support[plan.atoms[k][i]];
      self(self, t + 1, child, w * plan.weights[k]);
    }
  };
  recurse(recurse, 0, nodes, 1.0);
  MulticausalCoupling out = canonicalize(std::move(leaves), std::move(weights));
  out.policy = std::move(policy);
  return out;
}

CausalityReport verify_multicausal(const MulticausalCoupling& coupling, const std::vector<const ScenarioTree*>& trees,
                                   std::vector<std::size_t> constrained, std::size_t max_witnesses) {
  common_horizon(trees);
  if (coupling.size() > 0 && coupling.arity() != trees.size())
    throw ValidationError("coupling arity differs from the number of trees");
  CausalityReport report;
  for (std::size_t i = 0; i < trees.size(); ++i) {
    auto law = trees[i]->leaf_law();
    const double tv = total_variation(coupling.marginal(i, trees[i]->num_leaves()), law.weights);
    report.marginal_tv = std::max(report.marginal_tv, tv);
  }
  if (report.marginal_tv > 1e-9)
    throw ValidationError("coupling marginals differ from the tree laws (TV " + std::to_string(report.marginal_tv) + ")");
  const double tv = report.marginal_tv;
  report = check_causality(coupling, trees, std::move(constrained), max_witnesses);
  report.marginal_tv = tv;
  return report;
}

CausalityReport check_causality(const MulticausalCoupling& coupling, const std::vector<const ScenarioTree*>& trees,
                                std::vector<std::size_t> constrained, std::size_t max_witnesses) {
  common_horizon(trees);
  if (coupling.size() > 0 && coupling.arity() != trees.size())
    throw ValidationError("coupling arity differs from the number of trees");
  CausalityReport report;
  if (constrained.empty()) {
    constrained.resize(trees.size());
    std::iota(constrained.begin(), constrained.end(), std::size_t{0});
  }
  CausalityFamily family(trees, constrained, false);
  std::vector<double> integrals(family.num_functions(), 0.0);
  for (std::size_t k = 0; k < coupling.size(); ++k) {
    const double w = coupling.weights[k];
    family.for_each_term(coupling.leaves[k], [&](std::size_t f, double c) { integrals[f] += w * c; });
  }
  std::vector<std::size_t> bad;
  for (std::size_t f = 0; f < integrals.size(); ++f) {
    const double v = std::abs(integrals[f]);
    report.worst_violation = std::max(report.worst_violation, v);
    if (v > kCausalityTolerance) bad.push_back(f);
  }
  std::stable_sort(bad.begin(), bad.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(integrals[a]) > std::abs(integrals[b]); });
  if (bad.size() > max_witnesses) bad.resize(max_witnesses);
  for (std::size_t f : bad) {
    CausalityKey key = family.key(f);
    Witness w;
    w.process = key.coord;
    w.step_time = key.step_time;
    w.info_time = key.step_time - 1;
    std::size_t m = 0;
    for (std::size_t j = 0; j < trees.size(); ++j)
      if (j != key.coord) w.others.push_back(trees[j]->node(key.step_time - 1, key.others[m++]).id);
    w.own = trees[key.coord]->node(key.step_time, key.own).id;
    w.value = integrals[f];
    w.description = family.describe(f);
    report.witnesses.push_back(std::move(w));
  }
  report.pass = report.worst_violation <= kCausalityTolerance;
  return report;
}

OracleResult brute_force_mcot(const std::vector<const ScenarioTree*>& trees, const LeafCost& cost,
                              std::size_t budget) {
  const int horizon = common_horizon(trees);
  const std::size_t n = trees.size();
  TupleSpace space = leaf_space(trees, budget);
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  CausalityFamily family(trees, all, true);

  std::vector<std::size_t> base(n);
  std::size_t marginal_rows = 0;
  for (std::size_t i = 0; i < n; ++i) {
    base[i] = marginal_rows;
    marginal_rows += trees[i]->num_leaves();
  }
  LpProblem lp;
  lp.rows.resize(marginal_rows + family.num_functions());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t l = 0; l < trees[i]->num_leaves(); ++l) lp.rows[base[i] + l].rhs = trees[i]->leaf_probability(l);
  lp.objective.resize(space.size());
  std::vector<std::size_t> tuple(n);
  for (std::size_t v = 0; v < space.size(); ++v) {
    space.decode(v, tuple);
    lp.objective[v] = cost(tuple);
    if (!std::isfinite(lp.objective[v])) throw ValidationError("cost is not finite on a leaf tuple");
    for (std::size_t i = 0; i < n; ++i) lp.rows[base[i] + tuple[i]].terms.emplace_back(v, 1.0);
    family.for_each_term(tuple, [&](std::size_t f, double c) {
      lp.rows[marginal_rows + f].terms.emplace_back(v, c);
    });
  }
  OracleResult out;
  out.lp = solve_lp_checked(lp);
  out.value = out.lp.objective;

  std::vector<std::vector<std::size_t>> leaves;
  std::vector<double> weights;
  for (std::size_t v = 0; v < space.size(); ++v) {
    if (out.lp.x[v] <= 0.0) continue;
    leaves.push_back(space.decode(v));
    weights.push_back(out.lp.x[v]);
  }
  out.coupling = canonicalize(std::move(leaves), std::move(weights));

  DualCertificate& cert = out.certificate;
  cert.potentials.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    cert.potentials[i].assign(out.lp.duals.begin() + base[i], out.lp.duals.begin() + base[i] + trees[i]->num_leaves());
  pin_potentials(cert.potentials);
  for (std::size_t i = 0; i < n; ++i) {
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
    auto& blk = cert.blocks[key.coord * static_cast<std::size_t>(horizon - 1) + static_cast<std::size_t>(key.step_time - 2)];
    const std::size_t width = trees[key.coord]->level_size(key.step_time);
    blk.coefficients[blk.others.encode(key.others) * width + key.own] = -out.lp.duals[marginal_rows + f];
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t l = 0; l < trees[i]->num_leaves(); ++l)
      cert.dual_value += cert.potentials[i][l] * trees[i]->leaf_probability(l);
  return out;
}

OracleResult brute_force_mcot(const std::vector<ScenarioTree>& trees, const PathCost& cost, std::size_t budget) {
  auto ptrs = pointers(trees);
  return brute_force_mcot(ptrs, bind_cost(cost, ptrs), budget);
}

MulticausalCoupling restrict_coupling(const MulticausalCoupling& coupling, const std::vector<std::size_t>& subset) {
  if (subset.empty()) throw ValidationError("restriction needs a nonempty index set");
  for (std::size_t i : subset)
    if (i >= coupling.arity()) throw ValidationError("restriction index out of range");
  std::vector<std::vector<std::size_t>> leaves;
  std::vector<double> weights;
  for (std::size_t k = 0; k < coupling.size(); ++k) {
    std::vector<std::size_t> tuple;
    for (std::size_t i : subset) tuple.push_back(coupling.leaves[k][i]);
    leaves.push_back(std::move(tuple));
    weights.push_back(coupling.weights[k]);
  }
  return canonicalize(std::move(leaves), std::move(weights));
}

MulticausalCoupling glue(const MulticausalCoupling& pi, const MulticausalCoupling& gamma, std::size_t shared_leaves) {
  if (pi.size() == 0 || gamma.size() == 0) throw ValidationError("cannot glue empty couplings");
  const std::size_t m = pi.arity() - 1;
  const auto pm = pi.marginal(m, shared_leaves);
  const auto gm = gamma.marginal(0, shared_leaves);
  const double tv = total_variation(pm, gm);
  if (tv > 1e-9) throw ValidationError("shared marginals differ (TV " + std::to_string(tv) + ")");

  std::vector<std::vector<std::size_t>> by_shared(shared_leaves);
  for (std::size_t k = 0; k < gamma.size(); ++k) by_shared[gamma.leaves[k][0]].push_back(k);
  std::vector<std::vector<std::size_t>> leaves;
  std::vector<double> weights;
  for (std::size_t a = 0; a < pi.size(); ++a) {
    const std::size_t l = pi.leaves[a][m];
    if (!(gm[l] > 0.0)) continue;
    for (std::size_t g : by_shared[l]) {
      std::vector<std::size_t> tuple = pi.leaves[a];
      tuple.insert(tuple.end(), gamma.leaves[g].begin() + 1, gamma.leaves[g].end());
      leaves.push_back(std::move(tuple));
      weights.push_back(pi.weights[a] * gamma.weights[g] / gm[l]);
    }
  }
  return canonicalize(std::move(leaves), std::move(weights));
}

double aw_distance(const ScenarioTree& a, const ScenarioTree& b, double p) {
  if (!(p >= 1.0)) throw ValidationError("aw_distance needs p >= 1");
  std::vector<const ScenarioTree*> trees{&a, &b};
  DppResult r = mc_dpp(trees, bind_cost(lp_sum_cost(p), trees));
  const double v = std::max(r.value, 0.0);
  return p == 1.0 ? v : std::pow(v, 1.0 / p);
}

}  // namespace causalot
