#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "causalot/errors.hpp"
#include "causalot/run.hpp"

int main(int argc, char** argv) {
  causalot::RunConfig cfg;
  CLI::App app{"Causal and multicausal optimal transport on scenario trees"};
  app.add_option("command", cfg.command, "Command to run")
      ->required()
      ->check(CLI::IsMember(causalot::command_names()));
  app.add_option("inputs", cfg.inputs, "Input files (trees, instance, or coupling followed by trees)");
  app.add_option("--cost", cfg.cost, "lp_sum:<p>, metric, quadratic (mcot); power:<p> or JSON file (barycenters)");
  app.add_option("--cost-tensor", cfg.cost_tensor, "Dense leaf-tuple cost JSON for mcot");
  app.add_option("--weights", cfg.weights, "Barycenter weights lambda_i")->delimiter(',');
  app.add_option("--tasks", cfg.tasks, "Task support tree for causal and anticausal barycenters");
  app.add_option("--grid", cfg.grid, "State grid for the bicausal barycenter selector");
  app.add_option("--grid-epsilon", cfg.grid_epsilon, "Declared selector slack on the grid");
  app.add_option("--p", cfg.p, "Exponent for awdist")->capture_default_str();
  app.add_option("--n", cfg.n_quant, "Quantization nodes for counterexample")->capture_default_str();
  app.add_flag("--oracle", cfg.oracle, "Cross-check mcot against the brute-force LP");
  app.add_option("--oracle-tol", cfg.oracle_tolerance, "Relative tolerance for oracle agreement")->capture_default_str();
  app.add_option("--causal-tol", cfg.causal_tolerance, "Test-function tolerance")->capture_default_str();
  app.add_option("--budget", cfg.tuple_budget, "Leaf-tuple enumeration budget")->capture_default_str();
  app.add_option("--tensor-budget", cfg.tensor_budget, "Dense tensor entry budget")->capture_default_str();
  app.add_option("-o,--output", cfg.output, "Write the report here instead of stdout");
  app.add_option("--format", cfg.format, "json or text")->check(CLI::IsMember({"json", "text"}))->capture_default_str();
  app.add_flag("--timing", cfg.timing, "Add wall-clock timing to the report");
  app.add_option("--seed", cfg.seed, "Seed for random-tree")->capture_default_str();
  app.add_option("--horizon", cfg.horizon, "Horizon for random-tree")->capture_default_str();
  app.add_option("--branching", cfg.max_branching, "Maximum branching for random-tree")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    causalot::SolveReport report = causalot::run(cfg);
    const std::string out = report.render(cfg.format);
    if (cfg.output.empty()) {
      std::cout << out;
    } else {
      std::ofstream f(cfg.output);
      if (!f) throw causalot::ValidationError("cannot write " + cfg.output);
      f << out;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return causalot::exit_code(e);
  }
  return 0;
}
