#include <doctest.h>

#include <cmath>
#include <random>

#include "causalot/errors.hpp"
#include "causalot/matching.hpp"
#include "causalot/random_instances.hpp"
#include "support.hpp"

using namespace causalot;
using testing::random_trees;

namespace {

MatchingInstance random_market(std::mt19937_64& rng) {
  auto t = random_trees(rng, 3, 2, 3);
  PairCost utility = power_pair_cost(2.0, -1.0);
  ScenarioTree tasks = grid_tree({{-1.0, 0.0, 1.0}, {-1.0, 1.0}});
  return MatchingInstance(t[0], utility, {t[1], t[2]}, {power_pair_cost(2.0, 0.5), power_pair_cost(1.0, 1.0)}, tasks);
}

}  // namespace

TEST_CASE("equilibria pass verification") {
  std::mt19937_64 rng(71);
  for (int k = 0; k < 10; ++k) {
    MatchingInstance inst = random_market(rng);
    Equilibrium eq = solve_matching(inst);
    EquilibriumReport rep = verify_equilibrium(inst, eq);
    CHECK(rep.pass);
    CHECK(rep.clearing_ok);
    CHECK(rep.worst_marginal_tv <= 1e-9);
    for (double g : rep.optimality_gaps) CHECK(std::abs(g) <= 1e-7);
    // Principal cost is minus the utility.
    const Path& x = inst.trees()[0].leaf_path(0);
    const Path& y = inst.tasks().leaf_path(0);
    CHECK(inst.costs()[0](x, y) == -inst.utility()(x, y));
  }
}

TEST_CASE("perturbed wages break clearing at the named task") {
  std::mt19937_64 rng(73);
  MatchingInstance inst = random_market(rng);
  Equilibrium eq = solve_matching(inst);
  eq.wages[1][3] += 0.01;
  EquilibriumReport rep = verify_equilibrium(inst, eq);
  CHECK_FALSE(rep.clearing_ok);
  CHECK_FALSE(rep.pass);
  REQUIRE(rep.clearing_failures.size() == 1);
  CHECK(rep.clearing_failures[0] == leaf_label(inst.tasks(), 3));
}

TEST_CASE("a product plan is not a best response") {
  std::mt19937_64 rng(79);
  MatchingInstance inst = random_market(rng);
  Equilibrium eq = solve_matching(inst);
  // Replace population 1's plan with the product of its law and nu.
  const ScenarioTree& x = inst.trees()[1];
  TransportPlan prod;
  prod.marginals = eq.plans[1].marginals;
  for (std::size_t a = 0; a < x.num_leaves(); ++a)
    for (std::size_t y = 0; y < inst.tasks().num_leaves(); ++y)
      if (eq.nu.weights[y] > 0.0) {
        prod.atoms.push_back({a, y});
        prod.weights.push_back(x.leaf_probability(a) * eq.nu.weights[y]);
      }
  eq.plans[1] = prod;
  EquilibriumReport rep = verify_equilibrium(inst, eq);
  CHECK(rep.optimality_gaps[1] > 1e-7);
  CHECK_FALSE(rep.pass);
}

TEST_CASE("best response checks its inputs") {
  std::mt19937_64 rng(83);
  MatchingInstance inst = random_market(rng);
  CHECK_THROWS_AS(best_response(inst, 5, {}), ValidationError);
  CHECK_THROWS_AS(best_response(inst, 1, {1.0}), ValidationError);
  auto t = random_trees(rng, 2, 3, 2);
  CHECK_THROWS_AS(MatchingInstance(t[0], power_pair_cost(2.0), {t[1]}, {}, inst.tasks()), ValidationError);
}
