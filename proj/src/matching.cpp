#include "causalot/matching.hpp"

#include <cmath>
#include <limits>

#include "causalot/causality.hpp"
#include "causalot/errors.hpp"
#include "causalot/multicausal.hpp"

namespace causalot {

MatchingInstance::MatchingInstance(ScenarioTree principal, PairCost utility, std::vector<ScenarioTree> agents,
                                   std::vector<PairCost> agent_costs, ScenarioTree tasks)
    : utility_(std::move(utility)), tasks_(std::move(tasks)) {
  if (agents.size() != agent_costs.size()) throw ValidationError("one cost per agent population is required");
  const int horizon = principal.horizon();
  if (tasks_.horizon() != horizon) throw ValidationError("task tree horizon differs from the principal's");
  for (const auto& a : agents)
    if (a.horizon() != horizon) throw ValidationError("agent horizon differs from the principal's");
  trees_.push_back(std::move(principal));
  PairCost c0;
  c0.name = "-(" + utility_.name + ")";
  c0.eval = [u = utility_.eval](const Path& x, const Path& y) { return -u(x, y); };
  costs_.push_back(std::move(c0));
  for (std::size_t i = 0; i < agents.size(); ++i) {
    trees_.push_back(std::move(agents[i]));
    costs_.push_back(std::move(agent_costs[i]));
  }
}

std::string leaf_label(const ScenarioTree& tree, std::size_t leaf) {
  NodePath path = tree.path_to(tree.horizon(), leaf);
  std::string out;
  for (std::size_t k = 0; k < path.ids.size(); ++k) {
    if (k) out += "/";
    out += path.ids[k];
  }
  return out;
}

Equilibrium solve_matching(const MatchingInstance& instance) {
  Equilibrium eq;
  eq.barycenter = causal_barycenter(instance.trees(), instance.tasks(), instance.costs());
  eq.wages = eq.barycenter.g;
  eq.nu = eq.barycenter.nu;
  eq.plans = eq.barycenter.plans;
  for (std::size_t i = 0; i < instance.populations(); ++i)
    eq.values.push_back(best_response(instance, i, eq.wages[i]).value);
  return eq;
}

BestResponse best_response(const MatchingInstance& instance, std::size_t population, const std::vector<double>& wage) {
  if (population >= instance.populations()) throw ValidationError("no such population");
  const ScenarioTree& x = instance.trees()[population];
  const ScenarioTree& tasks = instance.tasks();
  const PairCost& cost = instance.costs()[population];
  const std::size_t lx = x.num_leaves();
  const std::size_t ly = tasks.num_leaves();
  if (wage.size() != ly) throw ValidationError("wage must have one entry per task leaf");
  for (double w : wage)
    if (!std::isfinite(w)) throw ValidationError("wage is not finite");

  std::vector<const ScenarioTree*> pair{&x, &tasks};
  CausalityFamily family(pair, {0}, true);
  LpProblem lp;
  lp.rows.resize(lx + family.num_functions());
  for (std::size_t a = 0; a < lx; ++a) lp.rows[a].rhs = x.leaf_probability(a);
  std::size_t tuple[2];
  for (std::size_t a = 0; a < lx; ++a)
    for (std::size_t y = 0; y < ly; ++y) {
      const std::size_t v = lp.add_var(cost(x.leaf_path(a), tasks.leaf_path(y)) - wage[y]);
      lp.rows[a].terms.emplace_back(v, 1.0);
      tuple[0] = a;
      tuple[1] = y;
      family.for_each_term(std::span<const std::size_t>(tuple, 2),
                           [&](std::size_t f, double c) { lp.rows[lx + f].terms.emplace_back(v, c); });
    }
  LpSolution sol = solve_lp_checked(lp);
  BestResponse out;
  out.value = sol.objective;
  out.plan.marginals = {x.leaf_law(), DiscreteDistribution{}};
  std::vector<double> second(ly, 0.0);
  for (std::size_t a = 0; a < lx; ++a)
    for (std::size_t y = 0; y < ly; ++y) {
      const double w = sol.x[a * ly + y];
      if (w > 0.0) {
        out.plan.atoms.push_back({a, y});
        out.plan.weights.push_back(w);
        second[y] += w;
      }
    }
  for (std::size_t y = 0; y < ly; ++y) {
    out.plan.marginals[1].support.push_back(y);
    out.plan.marginals[1].weights.push_back(second[y]);
  }
  return out;
}

EquilibriumReport verify_equilibrium(const MatchingInstance& instance, const Equilibrium& eq) {
  EquilibriumReport rep;
  const std::size_t n = instance.populations();
  const ScenarioTree& tasks = instance.tasks();
  const std::size_t ly = tasks.num_leaves();
  bool shapes = eq.wages.size() == n && eq.plans.size() == n && eq.nu.size() == ly;
  for (const auto& w : eq.wages) shapes = shapes && w.size() == ly;
  if (!shapes) {
    rep.clearing_failures.push_back("equilibrium shape does not match the instance");
    rep.optimality_gaps.assign(n, std::numeric_limits<double>::infinity());
    rep.optimality_ok.assign(n, false);
    return rep;
  }

  rep.clearing_ok = true;
  for (std::size_t y = 0; y < ly; ++y) {
    double rest = 0.0;
    for (std::size_t i = 1; i < n; ++i) rest += eq.wages[i][y];
    if (eq.wages[0][y] + rest != 0.0) {
      rep.clearing_ok = false;
      rep.clearing_failures.push_back(leaf_label(tasks, y));
    }
  }

  rep.common_marginal_ok = true;
  rep.causal_ok = true;
  for (std::size_t i = 0; i < n; ++i) {
    const ScenarioTree& x = instance.trees()[i];
    const TransportPlan& plan = eq.plans[i];
    std::vector<double> first(x.num_leaves(), 0.0), second(ly, 0.0);
    double achieved = 0.0;
    MulticausalCoupling coupling;
    for (std::size_t k = 0; k < plan.atoms.size(); ++k) {
      const std::size_t a = plan.atoms[k][0];
      const std::size_t y = plan.atoms[k][1];
      const double w = plan.weights[k];
      first.at(a) += w;
      second.at(y) += w;
      achieved += w * (instance.costs()[i](x.leaf_path(a), tasks.leaf_path(y)) - eq.wages[i][y]);
      coupling.leaves.push_back({a, y});
      coupling.weights.push_back(w);
    }
    const double tv = std::max(total_variation(second, eq.nu.weights), total_variation(first, x.leaf_law().weights));
    rep.worst_marginal_tv = std::max(rep.worst_marginal_tv, tv);
    if (tv > 1e-9) rep.common_marginal_ok = false;

    std::vector<const ScenarioTree*> pair{&x, &tasks};
    CausalityReport causal = check_causality(coupling, pair, {0}, 1);
    rep.worst_causal_violation = std::max(rep.worst_causal_violation, causal.worst_violation);
    if (!causal.pass) rep.causal_ok = false;

    const double best = best_response(instance, i, eq.wages[i]).value;
    const double gap = achieved - best;
    rep.optimality_gaps.push_back(gap);
    rep.optimality_ok.push_back(std::abs(gap) <= kOptimalityTolerance);
  }
  rep.pass = rep.clearing_ok && rep.common_marginal_ok && rep.causal_ok;
  for (bool ok : rep.optimality_ok) rep.pass = rep.pass && ok;
  return rep;
}

}  // namespace causalot
