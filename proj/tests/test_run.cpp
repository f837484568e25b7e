#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "causalot/errors.hpp"
#include "causalot/io.hpp"
#include "causalot/random_instances.hpp"
#include "causalot/run.hpp"
#include "support.hpp"

using namespace causalot;
namespace fs = std::filesystem;

namespace {

struct Scratch {
  fs::path dir;
  Scratch() {
    dir = fs::temp_directory_path() / ("causalot_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(dir / name) << text;
    return (dir / name).string();
  }
};

std::string random_tree_file(const Scratch& s, const std::string& name, std::uint64_t seed, int horizon = 2) {
  std::mt19937_64 rng(seed);
  RandomTreeOptions opts;
  opts.horizon = horizon;
  return s.write(name, serialize_tree(random_tree(rng, opts)));
}

RunConfig config(std::string command, std::vector<std::string> inputs) {
  RunConfig c;
  c.command = std::move(command);
  c.inputs = std::move(inputs);
  return c;
}

}  // namespace

TEST_CASE("awdist of a tree with itself is zero") {
  Scratch s;
  auto a = random_tree_file(s, "a.json", 1, 3);
  SolveReport r = run(config("awdist", {a, a}));
  CHECK(r.body["schema"] == "1");
  CHECK(r.body["value"].get<double>() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r.body["verification"]["bicausal"].get<bool>());
}

TEST_CASE("mcot with the oracle agrees and is byte-stable") {
  Scratch s;
  auto a = random_tree_file(s, "a.json", 2), b = random_tree_file(s, "b.json", 3), c = random_tree_file(s, "c.json", 4);
  RunConfig cfg = config("mcot", {a, b, c});
  cfg.cost = "lp_sum:2";
  cfg.oracle = true;
  SolveReport r = run(cfg);
  CHECK(r.body["oracle"]["gap_to_dpp"].get<double>() <= 1e-8);
  CHECK(r.body["oracle"]["agrees"].get<bool>());
  CHECK(r.body["duality_gap"].get<double>() <= 1e-8);
  CHECK(r.body["verification"]["min_dual_slack"].get<double>() >= -1e-8);
  CHECK(r.json() == run(cfg).json());
  CHECK_FALSE(r.body.contains("timing"));
  cfg.timing = true;
  CHECK(run(cfg).body.contains("timing"));
}

TEST_CASE("the coupling certificate re-verifies without solving") {
  Scratch s;
  auto a = random_tree_file(s, "a.json", 5, 3), b = random_tree_file(s, "b.json", 6, 3);
  SolveReport r = run(config("awdist", {a, b}));
  auto path = s.write("coupling.json", r.body["certificate"]["coupling"].dump());
  SolveReport v = run(config("verify-coupling", {path, a, b}));
  CHECK(v.body["verification"]["pass"].get<bool>());

  // Cost of the written coupling equals the reported value.
  std::vector<ScenarioTree> trees{load_tree_file(a), load_tree_file(b)};
  auto ptrs = pointers(trees);
  MulticausalCoupling c = coupling_from_json(read_json_file(path), ptrs);
  CHECK(c.expectation(bind_cost(lp_sum_cost(2.0), ptrs)) ==
        doctest::Approx(r.body["value"].get<double>()).epsilon(1e-12));
}

TEST_CASE("counterexample report") {
  RunConfig cfg = config("counterexample", {});
  cfg.n_quant = 4;
  SolveReport r = run(cfg);
  CHECK(r.body["cost_phi0_construction"].get<double>() == doctest::Approx(15.5).epsilon(1e-12));
  CHECK(r.text().find("cost_phi0_construction: 15.4999") != std::string::npos);
}

TEST_CASE("barycenter and matching commands") {
  Scratch s;
  auto a = random_tree_file(s, "a.json", 7), b = random_tree_file(s, "b.json", 8), c = random_tree_file(s, "c.json", 9);
  s.write("tasks.json", serialize_tree(grid_tree({{-1.0, 1.0}, {-1.0, 0.0, 1.0}})));
  RunConfig bc = config("bary-bc", {a, b});
  SolveReport rb = run(bc);
  CHECK(rb.body["verification"]["consistent"].get<bool>());

  RunConfig cc = config("bary-c", {a, b});
  cc.tasks = (s.dir / "tasks.json").string();
  SolveReport rc = run(cc);
  CHECK(rc.body["verification"]["causal"].get<bool>());
  CHECK(rc.body["verification"]["clearing"].get<double>() == 0.0);
  cc.command = "bary-anticausal";
  CHECK(run(cc).body["value"].get<double>() <= rc.body["value"].get<double>() + 1e-8);

  auto market = s.write("market.json", R"({
    "principal": {"tree": "a.json", "utility": {"kind": "linear", "scale": 1.0}},
    "agents": [{"tree": "b.json", "cost": {"kind": "power", "p": 2, "scale": 0.5}},
               {"tree": "c.json", "cost": {"kind": "power", "p": 1}}],
    "tasks": "tasks.json"})");
  SolveReport rm = run(config("match", {market}));
  CHECK(rm.body["verification"]["pass"].get<bool>());
  CHECK(rm.body["wages"].size() == 3);
}

TEST_CASE("errors map to exit codes") {
  Scratch s;
  auto a = random_tree_file(s, "a.json", 10);
  auto code = [](const RunConfig& c) {
    try {
      run(c);
    } catch (const std::exception& e) {
      return exit_code(e);
    }
    return 0;
  };
  CHECK(code(config("awdist", {a, a})) == 0);
  CHECK(code(config("awdist", {a})) == 2);
  CHECK(code(config("awdist", {a, (s.dir / "missing.json").string()})) == 2);
  CHECK(code(config("nonsense", {})) == 2);
  RunConfig tight = config("mcot", {a, a, a});
  tight.tuple_budget = 1;
  CHECK(code(tight) == 3);
  RunConfig bad = config("awdist", {a, a});
  bad.oracle_tolerance = 0.0;
  CHECK(code(bad) == 2);
  CHECK(exit_code(SolverError("x")) == 4);
  CHECK(exit_code(BudgetExceeded("x")) == 3);

  auto broken = s.write("broken.json", R"({"levels": [[{"id": "a", "parent": null, "p": 0.4, "x": 0}]]})");
  CHECK(code(config("awdist", {broken, broken})) == 2);
}

TEST_CASE("input formats") {
  CostTensor t = cost_tensor_from_json(nlohmann::json::parse(R"({"dims": [2, 2], "values": [0, 1, 2, 3]})"));
  const std::size_t idx[2] = {1, 0};
  CHECK(t.at(idx) == 2.0);
  CHECK_THROWS_AS(cost_tensor_from_json(nlohmann::json::parse(R"({"dims": [2, 2], "values": [0]})")),
                  ValidationError);
  SeparableCost c = separable_cost_from_json(nlohmann::json::parse(R"({"kind": "power", "p": 2, "weights": [1, 3]})"),
                                             2, 2);
  std::vector<double> x{1.0}, y{3.0};
  CHECK(c.step(1, 1, x, y) == doctest::Approx(12.0));
  CHECK_THROWS_AS(separable_cost_from_json(nlohmann::json::parse(R"({"kind": "cubic"})"), 2, 2), ValidationError);
  CHECK_THROWS_AS(pair_cost_from_json(nlohmann::json::parse(R"({"p": 2})")), ValidationError);
}
