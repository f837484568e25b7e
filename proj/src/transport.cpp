#include "causalot/transport.hpp"

#include <cmath>
#include <string>

#include "causalot/errors.hpp"

namespace causalot {

std::vector<double> TransportPlan::pushforward(std::size_t axis) const {
  std::vector<double> out(marginals.at(axis).size(), 0.0);
  for (std::size_t k = 0; k < atoms.size(); ++k) out.at(atoms[k][axis]) += weights[k];
  return out;
}

double TransportPlan::marginal_tv(std::size_t axis) const {
  return total_variation(pushforward(axis), marginals.at(axis).weights);
}

double TransportPlan::max_marginal_tv() const {
  double worst = 0.0;
  for (std::size_t a = 0; a < arity(); ++a) worst = std::max(worst, marginal_tv(a));
  return worst;
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ValidationError("total_variation: length mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) s += std::abs(p[k] - q[k]);
  return 0.5 * s;
}

std::size_t CostTensor::size() const {
  std::size_t s = 1;
  for (std::size_t d : dims) s *= d;
  return s;
}

std::size_t CostTensor::offset(std::span<const std::size_t> index) const {
  std::size_t off = 0;
  for (std::size_t a = 0; a < dims.size(); ++a) off = off * dims[a] + index[a];
  return off;
}

MultimarginalResult multimarginal_ot(const std::vector<DiscreteDistribution>& marginals, const CostTensor& cost,
                                     std::size_t budget) {
  const std::size_t n = marginals.size();
  if (n == 0) throw ValidationError("multimarginal_ot needs at least one marginal");
  if (cost.dims.size() != n) throw ValidationError("cost tensor rank differs from the number of marginals");
  std::size_t total = 1;
  for (std::size_t a = 0; a < n; ++a) {
    marginals[a].validate(1e-9);
    if (cost.dims[a] != marginals[a].size())
      throw ValidationError("cost tensor axis " + std::to_string(a) + " does not match its marginal");
    for (double w : marginals[a].weights)
      if (!(w > 0.0)) throw ValidationError("multimarginal_ot needs strictly positive marginal weights");
    if (total > budget / std::max<std::size_t>(cost.dims[a], 1))
      throw BudgetExceeded("cost tensor exceeds " + std::to_string(budget) + " entries");
    total *= cost.dims[a];
  }
  if (cost.data.size() != total) throw ValidationError("cost tensor data length mismatch");

  std::vector<std::size_t> base(n, 0);
  std::size_t rows = 0;
  for (std::size_t a = 0; a < n; ++a) {
    base[a] = rows;
    rows += marginals[a].size();
  }
  LpProblem lp;
  lp.objective = cost.data;
  lp.rows.resize(rows);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t k = 0; k < marginals[a].size(); ++k) lp.rows[base[a] + k].rhs = marginals[a].weights[k];
  std::vector<std::size_t> idx(n, 0);
  for (std::size_t v = 0; v < total; ++v) {
    for (std::size_t a = 0; a < n; ++a) lp.rows[base[a] + idx[a]].terms.emplace_back(v, 1.0);
    for (std::size_t a = n; a-- > 0;) {
      if (++idx[a] < cost.dims[a]) break;
      idx[a] = 0;
    }
  }
  LpSolution sol = solve_lp_checked(lp);

  MultimarginalResult out;
  out.value = sol.objective;
  out.iterations = sol.iterations;
  out.plan.marginals = marginals;
  std::fill(idx.begin(), idx.end(), 0);
  for (std::size_t v = 0; v < total; ++v) {
    if (sol.x[v] > 0.0) {
      out.plan.atoms.push_back(idx);
      out.plan.weights.push_back(sol.x[v]);
    }
    for (std::size_t a = n; a-- > 0;) {
      if (++idx[a] < cost.dims[a]) break;
      idx[a] = 0;
    }
  }
  out.duals.resize(n);
  for (std::size_t a = 0; a < n; ++a)
    out.duals[a].assign(sol.duals.begin() + base[a], sol.duals.begin() + base[a] + marginals[a].size());
  double shift = 0.0;
  for (std::size_t a = 0; a + 1 < n; ++a) {
    const double d = out.duals[a][0];
    for (double& u : out.duals[a]) u -= d;
    shift += d;
  }
  for (double& u : out.duals[n - 1]) u += shift;
  double dual_value = 0.0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t k = 0; k < marginals[a].size(); ++k) dual_value += out.duals[a][k] * marginals[a].weights[k];
  out.dual_gap = std::abs(out.value - dual_value);
  return out;
}

MultimarginalResult classical_ot(const DiscreteDistribution& mu, const DiscreteDistribution& nu,
                                 const std::vector<std::vector<double>>& cost) {
  CostTensor t;
  t.dims = {mu.size(), nu.size()};
  if (cost.size() != mu.size()) throw ValidationError("cost rows do not match mu");
  for (const auto& row : cost) {
    if (row.size() != nu.size()) throw ValidationError("cost columns do not match nu");
    t.data.insert(t.data.end(), row.begin(), row.end());
  }
  return multimarginal_ot({mu, nu}, t);
}

namespace detail {

FixedSupportBarycenter barycenter_lp(const std::vector<DiscreteDistribution>& measures,
                                     const std::vector<double>& lambdas,
                                     const std::vector<std::vector<std::vector<double>>>& costs,
                                     std::size_t support_size) {
  const std::size_t n = measures.size();
  if (n == 0) throw ValidationError("barycenter needs at least one measure");
  if (support_size == 0) throw ValidationError("barycenter support is empty");
  if (lambdas.size() != n || costs.size() != n) throw ValidationError("weights/costs do not match the measures");
  for (std::size_t i = 0; i < n; ++i) {
    measures[i].validate(1e-9);
    if (costs[i].size() != support_size) throw ValidationError("cost rows do not match the support");
    for (const auto& row : costs[i])
      if (row.size() != measures[i].size()) throw ValidationError("cost columns do not match measure " + std::to_string(i));
  }

  LpProblem lp;
  for (std::size_t s = 0; s < support_size; ++s) lp.add_var(0.0);
  std::vector<std::size_t> var_base(n);
  for (std::size_t i = 0; i < n; ++i) {
    var_base[i] = lp.num_vars();
    for (std::size_t s = 0; s < support_size; ++s)
      for (std::size_t a = 0; a < measures[i].size(); ++a) lp.add_var(lambdas[i] * costs[i][s][a]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t na = measures[i].size();
    for (std::size_t a = 0; a < na; ++a) {
      LpRow row;
      row.rhs = measures[i].weights[a];
      for (std::size_t s = 0; s < support_size; ++s) row.terms.emplace_back(var_base[i] + s * na + a, 1.0);
      lp.add_row(std::move(row));
    }
    for (std::size_t s = 0; s < support_size; ++s) {
      LpRow row;
      for (std::size_t a = 0; a < na; ++a) row.terms.emplace_back(var_base[i] + s * na + a, 1.0);
      row.terms.emplace_back(s, -1.0);
      lp.add_row(std::move(row));
    }
  }
  LpSolution sol = solve_lp_checked(lp);

  FixedSupportBarycenter out;
  out.value = sol.objective;
  out.iterations = sol.iterations;
  out.dual_value = sol.dual_objective;
  {
    std::size_t r = 0;
    for (std::size_t i = 0; i < n; ++i) {
      out.f.emplace_back(sol.duals.begin() + r, sol.duals.begin() + r + measures[i].size());
      r += measures[i].size();
      out.g.emplace_back(sol.duals.begin() + r, sol.duals.begin() + r + support_size);
      r += support_size;
    }
  }
  for (std::size_t s = 0; s < support_size; ++s) {
    out.nu.support.push_back(s);
    out.nu.weights.push_back(sol.x[s]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    TransportPlan plan;
    plan.marginals = {out.nu, measures[i]};
    const std::size_t na = measures[i].size();
    for (std::size_t s = 0; s < support_size; ++s)
      for (std::size_t a = 0; a < na; ++a) {
        const double w = sol.x[var_base[i] + s * na + a];
        if (w > 0.0) {
          plan.atoms.push_back({s, a});
          plan.weights.push_back(w);
        }
      }
    out.plans.push_back(std::move(plan));
  }
  return out;
}

}  // namespace detail

FixedSupportBarycenter wasserstein_barycenter_fixed_support(
    const std::vector<DiscreteDistribution>& measures, const std::vector<double>& lambdas,
    const std::vector<std::vector<std::vector<double>>>& costs, std::size_t support_size) {
  double total = 0.0;
  for (double l : lambdas) {
    if (!(l > 0.0)) throw ValidationError("barycenter weights must be positive");
    total += l;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ValidationError("barycenter weights must sum to 1");
  return detail::barycenter_lp(measures, lambdas, costs, support_size);
}

}  // namespace causalot
