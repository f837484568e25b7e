#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "causalot/errors.hpp"
#include "causalot/lp.hpp"
#include "causalot/transport.hpp"

using namespace causalot;

namespace {

DiscreteDistribution uniform(std::size_t n) {
  DiscreteDistribution d;
  for (std::size_t k = 0; k < n; ++k) {
    d.support.push_back(k);
    d.weights.push_back(1.0 / n);
  }
  return d;
}

}  // namespace

TEST_CASE("simplex on small programs") {
  // min -x - y  s.t. x + 2y + s1 = 4, 3x + y + s2 = 6  -> x = 8/5, y = 6/5
  LpProblem lp;
  for (double c : {-1.0, -1.0, 0.0, 0.0}) lp.add_var(c);
  lp.add_row({{{0, 1.0}, {1, 2.0}, {2, 1.0}}, 4.0});
  lp.add_row({{{0, 3.0}, {1, 1.0}, {3, 1.0}}, 6.0});
  LpSolution s = solve_lp(lp);
  REQUIRE(s.optimal());
  CHECK(s.objective == doctest::Approx(-2.8).epsilon(1e-14));
  CHECK(s.x[0] == doctest::Approx(1.6).epsilon(1e-14));
  CHECK(s.x[1] == doctest::Approx(1.2).epsilon(1e-14));
  CHECK(std::abs(s.dual_objective - s.objective) <= 1e-12);

  LpProblem infeasible;
  infeasible.add_var(1.0);
  infeasible.add_row({{{0, 1.0}}, -1.0});
  CHECK(solve_lp(infeasible).status == LpStatus::infeasible);
  CHECK_THROWS_AS(solve_lp_checked(infeasible), SolverError);

  LpProblem unbounded;
  unbounded.add_var(-1.0);
  unbounded.add_var(0.0);
  unbounded.add_row({{{0, 1.0}, {1, -1.0}}, 0.0});
  CHECK(solve_lp(unbounded).status == LpStatus::unbounded);

  // Duplicate row: redundant, multiplier zero.
  LpProblem dup;
  dup.add_var(1.0);
  dup.add_var(2.0);
  dup.add_row({{{0, 1.0}, {1, 1.0}}, 1.0});
  dup.add_row({{{0, 1.0}, {1, 1.0}}, 1.0});
  LpSolution d = solve_lp(dup);
  REQUIRE(d.optimal());
  CHECK(d.objective == doctest::Approx(1.0));
  CHECK(d.redundant_rows == 1);

  LpProblem bad;
  bad.add_var(1.0);
  bad.add_row({{{3, 1.0}}, 1.0});
  CHECK_THROWS_AS(solve_lp(bad), ValidationError);
}

TEST_CASE("degenerate programs under perturbation and frequent refactoring") {
  // Uniform assignment LPs are maximally degenerate; every option set must
  // reach the same optimum with matching duals.
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> cost(0, 3);
  for (int k = 0; k < 5; ++k) {
    const std::size_t n = 12;
    LpProblem lp;
    for (std::size_t i = 0; i < n * n; ++i) lp.add_var(cost(rng));
    for (std::size_t i = 0; i < n; ++i) {
      LpRow row, col;
      for (std::size_t j = 0; j < n; ++j) {
        row.terms.emplace_back(i * n + j, 1.0);
        col.terms.emplace_back(j * n + i, 1.0);
      }
      row.rhs = col.rhs = 1.0 / n;
      lp.add_row(row);
      lp.add_row(col);
    }
    const LpSolution base = solve_lp_checked(lp);
    CHECK(base.redundant_rows == 1);
    LpOptions eager;
    eager.degenerate_streak = 0;
    eager.refactor_interval = 1;
    const LpSolution other = solve_lp_checked(lp, eager);
    CHECK(std::abs(other.objective - base.objective) <= 1e-12);
    CHECK(other.gap <= 1e-12);
  }
}

TEST_CASE("classical transport basics") {
  DiscreteDistribution mu = uniform(2), nu = uniform(2);
  auto r = classical_ot(mu, nu, {{0.0, 1.0}, {1.0, 0.0}});
  CHECK(r.value == doctest::Approx(0.0));
  CHECK(r.plan.max_marginal_tv() <= 1e-12);

  auto anti = classical_ot(mu, nu, {{1.0, 0.0}, {0.0, 1.0}});
  CHECK(anti.value == doctest::Approx(0.0));
  CHECK(anti.plan.atoms.size() == 2);

  CHECK_THROWS_AS(classical_ot(mu, nu, {{0.0, 1.0}}), ValidationError);
}

TEST_CASE("uniform transport equals the best permutation") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 2 + trial % 4;
    std::vector<std::vector<double>> c(n, std::vector<double>(n));
    for (auto& row : c)
      for (double& v : row) v = u(rng);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = 1e300;
    do {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += c[i][perm[i]];
      best = std::min(best, s / n);
    } while (std::next_permutation(perm.begin(), perm.end()));
    auto r = classical_ot(uniform(n), uniform(n), c);
    CHECK(std::abs(r.value - best) <= 1e-12);
    // dual feasibility and strong duality
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) CHECK(r.duals[0][i] + r.duals[1][j] <= c[i][j] + 1e-12);
    CHECK(r.dual_gap <= 1e-12);
    CHECK(r.duals[0][0] == 0.0);
  }
}

TEST_CASE("multimarginal transport: product structure and budget") {
  // Separable cost: the optimum is the sum of the minima per axis.
  std::vector<DiscreteDistribution> ms{uniform(2), uniform(3), uniform(2)};
  CostTensor t;
  t.dims = {2, 3, 2};
  t.data.resize(12);
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 3; ++b)
      for (std::size_t c = 0; c < 2; ++c) t.data[(a * 3 + b) * 2 + c] = a + 2.0 * b + 4.0 * c;
  auto r = multimarginal_ot(ms, t);
  CHECK(r.value == doctest::Approx(0.5 + 2.0 + 2.0).epsilon(1e-14));
  for (std::size_t i = 0; i < 3; ++i) CHECK(r.plan.marginal_tv(i) <= 1e-12);
  CHECK_THROWS_AS(multimarginal_ot(ms, t, 11), BudgetExceeded);

  DiscreteDistribution zero = uniform(2);
  zero.weights = {1.0, 0.0};
  CHECK_THROWS_AS(multimarginal_ot({zero, uniform(2)}, CostTensor{{2, 2}, {0, 0, 0, 0}}), ValidationError);
}

TEST_CASE("fixed-support barycenter of two Diracs") {
  DiscreteDistribution d0{{0}, {1.0}}, d1{{0}, {1.0}};
  const std::vector<double> support{0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<std::vector<std::vector<double>>> costs(2);
  for (std::size_t s = 0; s < support.size(); ++s) {
    costs[0].push_back({support[s] * support[s]});
    costs[1].push_back({(support[s] - 1.0) * (support[s] - 1.0)});
  }
  auto b = wasserstein_barycenter_fixed_support({d0, d1}, {0.5, 0.5}, costs, support.size());
  CHECK(b.value == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(b.nu.weights[2] == doctest::Approx(1.0));
  CHECK(std::abs(b.dual_value - b.value) <= 1e-12);
  CHECK_THROWS_AS(wasserstein_barycenter_fixed_support({d0, d1}, {0.5, 0.6}, costs, support.size()), ValidationError);
}

TEST_CASE("total variation") {
  std::vector<double> p{0.5, 0.5}, q{1.0, 0.0};
  CHECK(total_variation(p, q) == doctest::Approx(0.5));
  CHECK(total_variation(p, p) == 0.0);
}
