#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <random>
#include <string>
#include <vector>

#include "causalot/barycenters.hpp"
#include "causalot/errors.hpp"
#include "causalot/multicausal.hpp"
#include "causalot/random_instances.hpp"
#include "causalot/run.hpp"
#include "causalot/scenario_tree.hpp"

namespace py = pybind11;
using namespace causalot;

namespace {

RunConfig config_from(const std::string& command, const std::vector<std::string>& inputs, const py::dict& opts) {
  RunConfig cfg;
  cfg.command = command;
  cfg.inputs = inputs;
  for (const auto& [k, v] : opts) {
    const auto key = py::cast<std::string>(k);
    if (key == "cost") cfg.cost = py::cast<std::string>(v);
    else if (key == "cost_tensor") cfg.cost_tensor = py::cast<std::string>(v);
    else if (key == "weights") cfg.weights = py::cast<std::vector<double>>(v);
    else if (key == "tasks") cfg.tasks = py::cast<std::string>(v);
    else if (key == "grid") cfg.grid = py::cast<std::string>(v);
    else if (key == "grid_epsilon") cfg.grid_epsilon = py::cast<double>(v);
    else if (key == "p") cfg.p = py::cast<double>(v);
    else if (key == "n") cfg.n_quant = py::cast<int>(v);
    else if (key == "oracle") cfg.oracle = py::cast<bool>(v);
    else if (key == "oracle_tol") cfg.oracle_tolerance = py::cast<double>(v);
    else if (key == "causal_tol") cfg.causal_tolerance = py::cast<double>(v);
    else if (key == "budget") cfg.tuple_budget = py::cast<std::size_t>(v);
    else if (key == "tensor_budget") cfg.tensor_budget = py::cast<std::size_t>(v);
    else if (key == "seed") cfg.seed = py::cast<std::uint64_t>(v);
    else if (key == "horizon") cfg.horizon = py::cast<int>(v);
    else if (key == "branching") cfg.max_branching = py::cast<std::size_t>(v);
    else throw ValidationError("unknown option \"" + key + "\"");
  }
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_causalot, m) {
  m.doc() = "Multicausal transport, adapted Wasserstein distances and causal barycenters on scenario trees";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<BudgetExceeded>(m, "BudgetExceeded", PyExc_RuntimeError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

  py::class_<ScenarioTree>(m, "Tree")
      .def_static("from_json", [](const std::string& text) { return load_tree(text); }, py::arg("text"))
      .def_static("from_file", &load_tree_file, py::arg("path"))
      .def("to_json", &serialize_tree)
      .def_property_readonly("horizon", &ScenarioTree::horizon)
      .def_property_readonly("num_leaves", &ScenarioTree::num_leaves)
      .def("leaf_probabilities",
           [](const ScenarioTree& t) {
             std::vector<double> out;
             for (std::size_t l = 0; l < t.num_leaves(); ++l) out.push_back(t.leaf_probability(l));
             return out;
           })
      .def("leaf_paths", [](const ScenarioTree& t) {
        std::vector<Path> out;
        for (std::size_t l = 0; l < t.num_leaves(); ++l) out.push_back(t.leaf_path(l));
        return out;
      });

  m.def(
      "random_tree",
      [](std::uint64_t seed, int horizon, std::size_t max_branching, std::size_t min_branching, double scale) {
        std::mt19937_64 rng(seed);
        RandomTreeOptions o;
        o.horizon = horizon;
        o.max_branching = max_branching;
        o.min_branching = min_branching;
        o.value_scale = scale;
        return random_tree(rng, o);
      },
      py::arg("seed"), py::arg("horizon") = 2, py::arg("max_branching") = 3, py::arg("min_branching") = 1,
      py::arg("value_scale") = 2.0);

  m.def(
      "mcot_value",
      [](const std::vector<ScenarioTree>& trees, const std::string& cost, bool oracle) {
        const PathCost c = parse_path_cost(cost);
        py::gil_scoped_release release;
        return oracle ? brute_force_mcot(trees, c).value : mc_dpp(trees, c).value;
      },
      py::arg("trees"), py::arg("cost") = "quadratic", py::arg("oracle") = false,
      "Multicausal transport value by backward recursion, or by the joint LP when oracle is set.");

  m.def(
      "aw_distance",
      [](const ScenarioTree& a, const ScenarioTree& b, double p) {
        py::gil_scoped_release release;
        return aw_distance(a, b, p);
      },
      py::arg("a"), py::arg("b"), py::arg("p") = 2.0);

  m.def(
      "counterexample",
      [](int n) {
        CounterexampleReport r = counterexample_demo(n);
        py::dict d;
        d["n_quant"] = r.n_quant;
        d["moment2"] = r.moment2;
        d["moment6"] = r.moment6;
        d["cost_phi0_construction"] = r.cost_phi0_construction;
        d["cost_phi0_stationary"] = r.cost_phi0_stationary;
        d["cost_canonical_candidate"] = r.cost_canonical_candidate;
        return d;
      },
      py::arg("n") = 4);

  m.def(
      "run_json",
      [](const std::string& command, const std::vector<std::string>& inputs, const py::dict& options) {
        RunConfig cfg = config_from(command, inputs, options);
        py::gil_scoped_release release;
        return run(cfg).json();
      },
      py::arg("command"), py::arg("inputs") = std::vector<std::string>{}, py::arg("options") = py::dict(),
      "Runs one CLI command in-process and returns the JSON report text.");

  m.def("commands", &command_names);
}
