#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <string>
#include <vector>

#include "causalot/io.hpp"
#include "causalot/multicausal.hpp"
#include "causalot/transport.hpp"

namespace causalot {

struct RunConfig {
  std::string command;
  std::vector<std::string> inputs;
  /// mcot: "lp_sum:<p>", "metric", "quadratic". Barycenters: "power:<p>" or a JSON file.
  std::string cost;
  /// Dense leaf-tuple cost for mcot, overriding `cost`.
  std::string cost_tensor;
  std::vector<double> weights;
  /// Task support tree (bary-c, bary-anticausal).
  std::string tasks;
  /// State grid for the bicausal barycenter selector: [[states at t=1], ...].
  std::string grid;
  double grid_epsilon = 0.0;
  double p = 2.0;
  int n_quant = 4;
  bool oracle = false;

  double oracle_tolerance = 1e-8;
  double causal_tolerance = kCausalityTolerance;
  std::size_t tuple_budget = kDefaultTupleBudget;
  std::size_t tensor_budget = kDefaultTensorBudget;

  std::string output;
  std::string format = "json";
  bool timing = false;
  std::uint64_t seed = 0;
  /// random-tree generator options.
  int horizon = 2;
  std::size_t max_branching = 3;

  /// ValidationError unless tolerances > 0, budgets >= 1 and the format is known.
  void validate() const;
};

struct SolveReport {
  Json body;

  std::string json() const { return body.dump(2) + "\n"; }
  /// Flattened "key: value" lines for scalar fields.
  std::string text() const;
  std::string render(const std::string& format) const { return format == "text" ? text() : json(); }
};

/// Dispatches one command. Throws ValidationError, BudgetExceeded or
/// SolverError; see exit_code.
SolveReport run(const RunConfig& config);

/// 2 for validation errors, 3 for budget refusals, 4 for solver failures,
/// 1 for anything else.
int exit_code(const std::exception& error);

const std::vector<std::string>& command_names();

}  // namespace causalot
