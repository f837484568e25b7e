#include <doctest.h>

#include <cmath>
#include <random>

#include "causalot/errors.hpp"
#include "causalot/quadrature.hpp"
#include "causalot/random_instances.hpp"
#include "causalot/scenario_tree.hpp"
#include "support.hpp"

using namespace causalot;

namespace {

const char* kTwoStep = R"({"horizon": 2, "levels": [
  [{"id": "a", "parent": null, "p": "1/3", "x": 0.0},
   {"id": "b", "parent": null, "p": "2/3", "x": 1.0}],
  [{"id": "a1", "parent": "a", "p": "1", "x": 2.0},
   {"id": "b1", "parent": "b", "p": "1/4", "x": 3.0},
   {"id": "b2", "parent": "b", "p": "3/4", "x": -3.0}]]})";

}  // namespace

TEST_CASE("tree parsing and indexing") {
  ScenarioTree t = load_tree(kTwoStep);
  CHECK(t.horizon() == 2);
  CHECK(t.num_leaves() == 3);
  CHECK(t.exact());
  CHECK(t.leaf_probability(0) == doctest::Approx(1.0 / 3.0));
  CHECK(t.leaf_probability(2) == doctest::Approx(0.5));
  CHECK(t.ancestor(2, 2, 1) == 1);
  CHECK(t.children(0, 0).size() == 2);
  CHECK(t.children(1, 1).size() == 2);

  NodePath p{{"b", "b2"}};
  CHECK(t.resolve(p) == 2);
  Path v = path_value(t, p);
  CHECK(v[0][0] == 1.0);
  CHECK(v[1][0] == -3.0);
  DiscreteDistribution k = conditional_kernel(t, NodePath{{"b"}});
  CHECK(k.weights == std::vector<double>{0.25, 0.75});
  CHECK_THROWS_AS(conditional_kernel(t, NodePath{{"b", "b1"}}), ValidationError);
  CHECK_THROWS_AS(t.resolve(NodePath{{"a", "b1"}}), ValidationError);
}

TEST_CASE("serialization round-trips exactly") {
  ScenarioTree t = load_tree(kTwoStep);
  const std::string once = serialize_tree(t);
  ScenarioTree back = load_tree(once);
  CHECK(serialize_tree(back) == once);

  std::mt19937_64 rng(5);
  for (int k = 0; k < 20; ++k) {
    RandomTreeOptions opts;
    opts.horizon = 3;
    ScenarioTree r = random_tree(rng, opts);
    ScenarioTree r2 = load_tree(serialize_tree(r));
    REQUIRE(r2.num_leaves() == r.num_leaves());
    for (std::size_t l = 0; l < r.num_leaves(); ++l) {
      CHECK(r2.leaf_probability(l) == r.leaf_probability(l));
      CHECK(r2.leaf_path(l) == r.leaf_path(l));
    }
  }
}

TEST_CASE("broken trees are rejected with node-level messages") {
  auto message = [](const char* json) {
    try {
      load_tree(json);
    } catch (const ValidationError& e) {
      return std::string(e.what());
    }
    return std::string("accepted");
  };
  CHECK(message(R"({"levels": [[{"id": "a", "parent": null, "p": 0.5, "x": 0}]]})").find("sum") != std::string::npos);
  CHECK(message(R"({"levels": [[{"id": "a", "parent": null, "p": 1, "x": 0}],
                    [{"id": "b", "parent": "zz", "p": 1, "x": 0}]]})")
            .find("orphan") != std::string::npos);
  CHECK(message(R"({"levels": [[{"id": "a", "parent": null, "p": 1, "x": 0}],
                    [{"id": "b", "parent": "a", "p": 1, "x": [0, 1]}, {"id": "c", "parent": "a", "p": 0, "x": [0, 1]}]]})")
            .find("(0,1]") != std::string::npos);
  CHECK(message(R"({"levels": [[{"id": "a", "parent": null, "p": "1/3", "x": 0},
                    {"id": "b", "parent": null, "p": "1/3", "x": 0}]]})")
            .find("exact") != std::string::npos);
  CHECK(message(R"({"levels": [[{"id": "a", "parent": null, "p": 1, "x": 0}],
                    [{"id": "b", "parent": "a", "p": 1, "x": 0}], []]})")
            .find("empty") != std::string::npos);
  CHECK(message(R"({"levels": [[{"id": "a", "parent": null, "p": 0.5, "x": 0}, {"id": "a", "parent": null, "p": 0.5, "x": 1}]]})")
            .find("duplicate") != std::string::npos);
  CHECK(message("not json").find("parse") != std::string::npos);
}

TEST_CASE("deterministic paths") {
  std::vector<double> xs{1.0, 2.0, 4.0};
  ScenarioTree t = ScenarioTree::deterministic(xs);
  CHECK(t.horizon() == 3);
  CHECK(t.num_leaves() == 1);
  CHECK(t.leaf_probability(0) == 1.0);
  CHECK(t.leaf_path(0)[2][0] == 4.0);
}

TEST_CASE("random trees satisfy the kernel invariants") {
  std::mt19937_64 rng(17);
  for (int k = 0; k < 50; ++k) {
    RandomTreeOptions opts;
    opts.horizon = 1 + k % 3;
    ScenarioTree t = random_tree(rng, opts);
    double total = 0.0;
    for (std::size_t l = 0; l < t.num_leaves(); ++l) total += t.leaf_probability(l);
    CHECK(std::abs(total - 1.0) <= 1e-10);
    for (int d = 1; d < t.horizon(); ++d)
      for (std::size_t n = 0; n < t.level_size(d); ++n) {
        double s = 0.0;
        for (std::size_t c : t.children(d, n)) s += t.node(d + 1, c).prob;
        CHECK(std::abs(s - 1.0) <= 1e-12);
      }
  }
}

TEST_CASE("grid trees are full products with uniform kernels") {
  ScenarioTree g = grid_tree({{0.0, 1.0}, {-1.0, 0.0, 1.0}});
  CHECK(g.num_leaves() == 6);
  for (std::size_t l = 0; l < 6; ++l) CHECK(g.leaf_probability(l) == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("Gauss-Hermite quantization") {
  Quantization q2 = quantize_gauss_hermite(2);
  CHECK(q2.nodes[0] == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(q2.nodes[1] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(q2.weights[0] == doctest::Approx(0.5).epsilon(1e-14));

  for (int n : {1, 3, 4, 5, 6, 8, 12}) {
    Quantization q = quantize_gauss_hermite(n);
    double wsum = 0.0;
    for (double w : q.weights) wsum += w;
    CHECK(std::abs(wsum - 1.0) <= 1e-13);
    for (int i = 0; i < n; ++i) CHECK(std::abs(q.nodes[i] + q.nodes[n - 1 - i]) <= 1e-12);
    // E[Z^{2k}] = (2k-1)!! for every order the rule integrates exactly.
    double dfact = 1.0;
    for (int k = 1; 2 * k <= 2 * n - 1; ++k) {
      dfact *= 2 * k - 1;
      double m = 0.0, odd = 0.0;
      for (int i = 0; i < n; ++i) {
        m += q.weights[i] * std::pow(q.nodes[i], 2 * k);
        odd += q.weights[i] * std::pow(q.nodes[i], 2 * k - 1);
      }
      CHECK(std::abs(m - dfact) <= 1e-11 * dfact);
      CHECK(std::abs(odd) <= 1e-11 * dfact);
    }
  }
  CHECK_THROWS_AS(quantize_gauss_hermite(0), ValidationError);
}
