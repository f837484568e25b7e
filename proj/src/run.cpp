#include "causalot/run.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <optional>
#include <random>
#include <sstream>

#include "causalot/barycenters.hpp"
#include "causalot/errors.hpp"
#include "causalot/matching.hpp"
#include "causalot/random_instances.hpp"

namespace causalot {

namespace fs = std::filesystem;

namespace {

constexpr const char* kSchema = "1";

std::vector<ScenarioTree> load_trees(const std::vector<std::string>& paths) {
  std::vector<ScenarioTree> out;
  for (const auto& p : paths) out.push_back(load_tree_file(p));
  return out;
}

void need_inputs(const RunConfig& cfg, std::size_t lo, std::size_t hi) {
  const std::size_t n = cfg.inputs.size();
  if (n < lo || n > hi) {
    std::ostringstream os;
    os << cfg.command << " takes ";
    if (lo == hi)
      os << lo;
    else if (hi == static_cast<std::size_t>(-1))
      os << "at least " << lo;
    else
      os << lo << " to " << hi;
    os << " input file(s), got " << n;
    throw ValidationError(os.str());
  }
}

Json header(const RunConfig& cfg) {
  Json j;
  j["schema"] = kSchema;
  j["command"] = cfg.command;
  j["inputs"] = cfg.inputs;
  return j;
}

Json solver_stats(const DppResult& d) {
  return Json{{"lp_solves", d.lp_solves}, {"lp_iterations", d.lp_iterations}, {"max_inner_gap", d.max_inner_gap}};
}

struct BaryCost {
  SeparableCost cost;
  std::optional<double> power;
  std::vector<double> weights;
};

BaryCost bary_cost(const RunConfig& cfg, std::size_t processes, int horizon) {
  std::string spec = cfg.cost.empty() ? "power:2" : cfg.cost;
  BaryCost out;
  if (spec.rfind("power:", 0) == 0) {
    out.cost = separable_cost_from_spec(spec, cfg.weights, processes, horizon);
    out.power = std::stod(spec.substr(6));
    out.weights = cfg.weights.empty() ? std::vector<double>(processes, 1.0 / processes) : cfg.weights;
    return out;
  }
  nlohmann::json doc = read_json_file(spec);
  out.cost = separable_cost_from_json(doc, processes, horizon);
  if (doc.value("kind", "") == "power") {
    out.power = doc.value("p", 2.0);
    out.weights = doc.contains("weights") ? doc["weights"].get<std::vector<double>>()
                                          : std::vector<double>(processes, 1.0 / processes);
  }
  return out;
}

Phi0Selector bary_selector(const RunConfig& cfg, const BaryCost& bc) {
  if (!cfg.grid.empty()) {
    nlohmann::json doc = read_json_file(cfg.grid);
    const nlohmann::json& jg = doc.is_object() ? doc.at("grid") : doc;
    std::vector<std::vector<std::vector<double>>> grid;
    for (const auto& step : jg) {
      auto& g = grid.emplace_back();
      for (const auto& s : step) g.push_back(s.is_number() ? std::vector<double>{s.get<double>()} : s.get<std::vector<double>>());
    }
    double eps = cfg.grid_epsilon;
    if (doc.is_object() && doc.contains("epsilon")) eps = doc["epsilon"].get<double>();
    return phi0_grid(std::move(grid), eps);
  }
  if (bc.power && *bc.power == 2.0) {
    double total = 0.0;
    for (double w : bc.weights) total += w;
    std::vector<double> normalized;
    for (double w : bc.weights) normalized.push_back(w / total);
    return phi0_quadratic(std::move(normalized));
  }
  throw ValidationError("only the quadratic cost has a closed-form selector; pass --grid");
}

Json run_awdist(const RunConfig& cfg) {
  need_inputs(cfg, 2, 2);
  if (!(cfg.p >= 1.0)) throw ValidationError("--p must be >= 1");
  auto trees = load_trees(cfg.inputs);
  auto ptrs = pointers(trees);
  const LeafCost cost = bind_cost(lp_sum_cost(cfg.p), ptrs);
  DppResult d = mc_dpp(ptrs, cost, cfg.tuple_budget);
  MulticausalCoupling coupling = assemble_coupling(d.policy, ptrs);
  DualCertificate cert = dpp_certificate(d, ptrs);
  DualCheck chk = check_certificate(cert, ptrs, cost, coupling, cfg.tuple_budget);
  CausalityReport causal = verify_multicausal(coupling, ptrs);

  const double v = std::max(d.value, 0.0);
  Json j = header(cfg);
  j["p"] = cfg.p;
  j["distance"] = cfg.p == 1.0 ? v : std::pow(v, 1.0 / cfg.p);
  j["value"] = d.value;
  j["duality_gap"] = std::abs(chk.dual_value - d.value);
  j["verification"] = Json{{"bicausal", causal.worst_violation <= cfg.causal_tolerance},
                           {"worst_violation", causal.worst_violation},
                           {"min_dual_slack", chk.min_slack},
                           {"coupling_cost", coupling.expectation(cost)}};
  j["solver"] = solver_stats(d);
  j["certificate"] = Json{{"coupling", coupling_to_json(coupling, ptrs)}, {"dual", certificate_to_json(cert, ptrs)}};
  return j;
}

LeafCost mcot_cost(const RunConfig& cfg, const std::vector<const ScenarioTree*>& ptrs, std::string& label) {
  if (!cfg.cost_tensor.empty()) {
    CostTensor t = cost_tensor_from_json(read_json_file(cfg.cost_tensor));
    if (t.dims.size() != ptrs.size()) throw ValidationError("cost tensor needs one axis per tree");
    for (std::size_t i = 0; i < ptrs.size(); ++i)
      if (t.dims[i] != ptrs[i]->num_leaves())
        throw ValidationError("cost tensor axis " + std::to_string(i) + " does not match the leaf count");
    if (t.size() > cfg.tensor_budget) throw BudgetExceeded("cost tensor exceeds the tensor budget");
    label = "tensor:" + cfg.cost_tensor;
    return tensor_cost(std::move(t));
  }
  label = cfg.cost.empty() ? "lp_sum:2" : cfg.cost;
  return bind_cost(parse_path_cost(label), ptrs);
}

Json oracle_json(const OracleResult& o) {
  return Json{{"value", o.value},
              {"duality_gap", o.lp.gap},
              {"dual_value", o.certificate.dual_value},
              {"lp_iterations", o.lp.iterations}};
}

Json run_mcot(const RunConfig& cfg) {
  need_inputs(cfg, 1, static_cast<std::size_t>(-1));
  auto trees = load_trees(cfg.inputs);
  auto ptrs = pointers(trees);
  std::string label;
  const LeafCost cost = mcot_cost(cfg, ptrs, label);
  DppResult d = mc_dpp(ptrs, cost, cfg.tuple_budget);
  MulticausalCoupling coupling = assemble_coupling(d.policy, ptrs);
  DualCertificate cert = dpp_certificate(d, ptrs);
  DualCheck chk = check_certificate(cert, ptrs, cost, coupling, cfg.tuple_budget);
  CausalityReport causal = verify_multicausal(coupling, ptrs);

  Json j = header(cfg);
  j["cost"] = label;
  j["value"] = d.value;
  j["duality_gap"] = std::abs(chk.dual_value - d.value);
  if (cfg.oracle) {
    OracleResult o = brute_force_mcot(ptrs, cost, cfg.tuple_budget);
    Json jo = oracle_json(o);
    const double gap = std::abs(o.value - d.value);
    jo["gap_to_dpp"] = gap;
    jo["agrees"] = gap <= cfg.oracle_tolerance * (1.0 + std::abs(d.value));
    j["oracle"] = std::move(jo);
  }
  j["verification"] = Json{{"multicausal", causal.worst_violation <= cfg.causal_tolerance},
                           {"worst_violation", causal.worst_violation},
                           {"min_dual_slack", chk.min_slack},
                           {"coupling_cost", coupling.expectation(cost)}};
  j["solver"] = solver_stats(d);
  j["certificate"] = Json{{"coupling", coupling_to_json(coupling, ptrs)}, {"dual", certificate_to_json(cert, ptrs)}};
  return j;
}

Json run_mcot_oracle(const RunConfig& cfg) {
  need_inputs(cfg, 1, static_cast<std::size_t>(-1));
  auto trees = load_trees(cfg.inputs);
  auto ptrs = pointers(trees);
  std::string label;
  const LeafCost cost = mcot_cost(cfg, ptrs, label);
  OracleResult o = brute_force_mcot(ptrs, cost, cfg.tuple_budget);
  DualCheck chk = check_certificate(o.certificate, ptrs, cost, o.coupling, cfg.tuple_budget);
  CausalityReport causal = verify_multicausal(o.coupling, ptrs);

  Json j = header(cfg);
  j["cost"] = label;
  j["value"] = o.value;
  j["duality_gap"] = o.lp.gap;
  j["verification"] = Json{{"multicausal", causal.worst_violation <= cfg.causal_tolerance},
                           {"worst_violation", causal.worst_violation},
                           {"min_dual_slack", chk.min_slack},
                           {"martingale_integral", chk.martingale_integral}};
  j["solver"] = Json{{"lp_iterations", o.lp.iterations}, {"redundant_rows", o.lp.redundant_rows}};
  j["certificate"] = Json{{"coupling", coupling_to_json(o.coupling, ptrs)},
                          {"dual", certificate_to_json(o.certificate, ptrs)}};
  return j;
}

Json run_bary_bc(const RunConfig& cfg) {
  need_inputs(cfg, 1, static_cast<std::size_t>(-1));
  auto trees = load_trees(cfg.inputs);
  auto ptrs = pointers(trees);
  BaryCost bc = bary_cost(cfg, trees.size(), trees.front().horizon());
  Phi0Selector selector = bary_selector(cfg, bc);
  BicausalBarycenter b = bc_barycenter(trees, bc.cost, selector, cfg.tuple_budget);
  const LeafCost cost = bind_cost(aggregate_cost(bc.cost, selector), ptrs);
  DualCertificate cert = dpp_certificate(b.dpp, ptrs);
  DualCheck chk = check_certificate(cert, ptrs, cost, b.coupling, cfg.tuple_budget);
  const double recomputed = bc_bary_value(trees, bc.cost, b.process.tree, cfg.tuple_budget);

  Json j = header(cfg);
  j["cost"] = bc.cost.description;
  j["selector"] = selector.mode == Phi0Selector::Mode::grid ? "grid" : "weighted_mean";
  j["value"] = b.value;
  j["duality_gap"] = std::abs(chk.dual_value - b.value);
  j["barycenter"] = tree_to_json(b.process.tree);
  j["verification"] = Json{{"transport_value_of_barycenter", recomputed},
                           {"consistent", std::abs(recomputed - b.value) <= cfg.oracle_tolerance * (1.0 + std::abs(b.value))},
                           {"min_dual_slack", chk.min_slack}};
  j["solver"] = solver_stats(b.dpp);
  j["certificate"] = Json{{"coupling", coupling_to_json(b.coupling, ptrs)}, {"dual", certificate_to_json(cert, ptrs)}};
  return j;
}

std::vector<PairCost> pair_costs(const SeparableCost& cost) {
  std::vector<PairCost> out;
  for (std::size_t i = 0; i < cost.processes; ++i) out.push_back(cost.pair(i));
  return out;
}

ScenarioTree task_tree(const RunConfig& cfg) {
  if (cfg.tasks.empty()) throw ValidationError(cfg.command + " needs --tasks");
  return load_tree_file(cfg.tasks);
}

Json plans_json(const std::vector<TransportPlan>& plans, const std::vector<ScenarioTree>& trees,
                const ScenarioTree& tasks) {
  Json out = Json::array();
  for (std::size_t i = 0; i < plans.size(); ++i) out.push_back(plan_to_json(plans[i], trees[i], tasks));
  return out;
}

Json causal_certificate(const CausalBarycenterSolution& sol, const std::vector<ScenarioTree>& trees,
                        const ScenarioTree& tasks) {
  Json f = Json::array(), g = Json::array(), coeffs = Json::array();
  for (std::size_t i = 0; i < trees.size(); ++i) {
    f.push_back(by_leaf(trees[i], sol.f[i]));
    g.push_back(by_leaf(tasks, sol.g[i]));
    std::vector<const ScenarioTree*> pair{&trees[i], &tasks};
    coeffs.push_back(certificate_to_json(sol.coefficients[i], pair)["test_functions"]);
  }
  return Json{{"plans", plans_json(sol.plans, trees, tasks)},
              {"f", std::move(f)},
              {"g", std::move(g)},
              {"test_functions", std::move(coeffs)},
              {"dual_value", sol.dual_value}};
}

Json run_bary_c(const RunConfig& cfg) {
  need_inputs(cfg, 1, static_cast<std::size_t>(-1));
  auto trees = load_trees(cfg.inputs);
  ScenarioTree tasks = task_tree(cfg);
  BaryCost bc = bary_cost(cfg, trees.size(), trees.front().horizon());
  auto costs = pair_costs(bc.cost);
  CausalBarycenterSolution sol = causal_barycenter(trees, tasks, costs, cfg.tuple_budget);
  CausalDualCheck chk = check_causal_dual(sol, trees, tasks, costs);

  bool causal = true;
  double worst = 0.0, tv = 0.0;
  for (std::size_t i = 0; i < trees.size(); ++i) {
    MulticausalCoupling c;
    for (std::size_t k = 0; k < sol.plans[i].atoms.size(); ++k) {
      c.leaves.push_back(sol.plans[i].atoms[k]);
      c.weights.push_back(sol.plans[i].weights[k]);
    }
    std::vector<const ScenarioTree*> pair{&trees[i], &tasks};
    CausalityReport r = check_causality(c, pair, {0}, 0);
    causal = causal && r.worst_violation <= cfg.causal_tolerance;
    worst = std::max(worst, r.worst_violation);
    std::vector<double> second(tasks.num_leaves(), 0.0);
    for (std::size_t k = 0; k < c.size(); ++k) second[c.leaves[k][1]] += c.weights[k];
    tv = std::max(tv, total_variation(second, sol.nu.weights));
  }

  Json j = header(cfg);
  j["tasks"] = cfg.tasks;
  j["cost"] = bc.cost.description;
  j["value"] = sol.value;
  j["duality_gap"] = std::abs(sol.value - sol.dual_value);
  j["nu"] = by_leaf(tasks, sol.nu.weights);
  j["verification"] = Json{{"causal", causal},
                           {"worst_violation", worst},
                           {"common_marginal_tv", tv},
                           {"min_dual_slack", chk.min_slack},
                           {"support_slack", chk.support_slack},
                           {"clearing", chk.clearing}};
  j["solver"] = Json{{"lp_iterations", sol.lp.iterations}, {"redundant_rows", sol.lp.redundant_rows}};
  j["certificate"] = causal_certificate(sol, trees, tasks);
  return j;
}

Json run_bary_anticausal(const RunConfig& cfg) {
  need_inputs(cfg, 1, static_cast<std::size_t>(-1));
  auto trees = load_trees(cfg.inputs);
  ScenarioTree tasks = task_tree(cfg);
  BaryCost bc = bary_cost(cfg, trees.size(), trees.front().horizon());
  auto costs = pair_costs(bc.cost);
  AnticausalBarycenter a = anticausal_barycenter(trees, costs, tasks);

  Json kernels = Json::array(), f = Json::array(), g = Json::array();
  for (std::size_t i = 0; i < trees.size(); ++i) {
    Json ki = Json::object();
    for (std::size_t y = 0; y < tasks.num_leaves(); ++y) {
      const auto& k = a.kernels[i][y];
      if (k.size() == 0) continue;
      Json law = Json::object();
      for (std::size_t s = 0; s < k.size(); ++s) law[leaf_label(trees[i], k.support[s])] = k.weights[s];
      ki[leaf_label(tasks, y)] = std::move(law);
    }
    kernels.push_back(std::move(ki));
    f.push_back(by_leaf(trees[i], a.f[i]));
    g.push_back(by_leaf(tasks, a.g[i]));
  }
  Json j = header(cfg);
  j["tasks"] = cfg.tasks;
  j["cost"] = bc.cost.description;
  j["value"] = a.value;
  j["duality_gap"] = std::abs(a.value - a.dual_value);
  j["nu"] = by_leaf(tasks, a.nu.weights);
  j["kernels"] = std::move(kernels);
  j["certificate"] = Json{{"plans", plans_json(a.plans, trees, tasks)},
                          {"f", std::move(f)},
                          {"g", std::move(g)},
                          {"dual_value", a.dual_value}};
  return j;
}

Json run_match(const RunConfig& cfg) {
  need_inputs(cfg, 1, 1);
  const fs::path path = cfg.inputs[0];
  MatchingInstance inst = matching_instance_from_json(read_json_file(path), path.parent_path());
  Equilibrium eq = solve_matching(inst);
  EquilibriumReport rep = verify_equilibrium(inst, eq);
  const ScenarioTree& tasks = inst.tasks();

  Json wages = Json::array();
  for (const auto& w : eq.wages) wages.push_back(by_leaf(tasks, w));
  Json j = header(cfg);
  j["value"] = eq.barycenter.value;
  j["duality_gap"] = std::abs(eq.barycenter.value - eq.barycenter.dual_value);
  j["wages"] = std::move(wages);
  j["nu"] = by_leaf(tasks, eq.nu.weights);
  j["best_response_values"] = eq.values;
  Json opt = Json::array();
  for (bool b : rep.optimality_ok) opt.push_back(b);
  j["verification"] = Json{{"pass", rep.pass},
                           {"clearing", rep.clearing_ok},
                           {"clearing_failures", rep.clearing_failures},
                           {"optimality_gaps", rep.optimality_gaps},
                           {"optimality", std::move(opt)},
                           {"common_marginal", rep.common_marginal_ok},
                           {"worst_marginal_tv", rep.worst_marginal_tv},
                           {"causal", rep.causal_ok},
                           {"worst_causal_violation", rep.worst_causal_violation}};
  j["certificate"] = causal_certificate(eq.barycenter, inst.trees(), tasks);
  return j;
}

Json run_verify(const RunConfig& cfg) {
  need_inputs(cfg, 2, static_cast<std::size_t>(-1));
  std::vector<std::string> tree_paths(cfg.inputs.begin() + 1, cfg.inputs.end());
  auto trees = load_trees(tree_paths);
  auto ptrs = pointers(trees);
  MulticausalCoupling c = coupling_from_json(read_json_file(cfg.inputs[0]), ptrs);
  CausalityReport r = verify_multicausal(c, ptrs);
  Json j = header(cfg);
  j["atoms"] = c.size();
  r.pass = r.worst_violation <= cfg.causal_tolerance;
  j["verification"] = causality_to_json(r);
  return j;
}

Json run_counterexample(const RunConfig& cfg) {
  CounterexampleReport r = counterexample_demo(cfg.n_quant);
  Json j = header(cfg);
  j["n"] = r.n_quant;
  j["moment2"] = r.moment2;
  j["moment6"] = r.moment6;
  j["cost_phi0_construction"] = r.cost_phi0_construction;
  j["cost_phi0_stationary"] = r.cost_phi0_stationary;
  j["cost_canonical_candidate"] = r.cost_canonical_candidate;
  j["candidate_terms"] = r.candidate_terms;
  double gap = 0.0;
  for (double g : r.candidate_gaps) gap = std::max(gap, g);
  j["duality_gap"] = gap;
  return j;
}

Json run_random_tree(const RunConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  RandomTreeOptions opts;
  opts.horizon = cfg.horizon;
  opts.max_branching = cfg.max_branching;
  if (opts.horizon < 1 || opts.max_branching < 1) throw ValidationError("horizon and branching must be >= 1");
  return tree_to_json(random_tree(rng, opts));
}

}  // namespace

void RunConfig::validate() const {
  if (!(oracle_tolerance > 0.0) || !(causal_tolerance > 0.0))
    throw ValidationError("tolerances must be > 0");
  if (tuple_budget < 1 || tensor_budget < 1) throw ValidationError("budgets must be >= 1");
  if (format != "json" && format != "text") throw ValidationError("format must be json or text");
  if (!(grid_epsilon >= 0.0)) throw ValidationError("grid epsilon must be >= 0");
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"awdist",         "mcot",  "mcot-oracle",     "bary-bc",
                                              "bary-c",         "bary-anticausal", "match", "verify-coupling",
                                              "counterexample", "random-tree"};
  return names;
}

SolveReport run(const RunConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  Json body;
  const std::string& c = config.command;
  if (c == "awdist")
    body = run_awdist(config);
  else if (c == "mcot")
    body = run_mcot(config);
  else if (c == "mcot-oracle")
    body = run_mcot_oracle(config);
  else if (c == "bary-bc")
    body = run_bary_bc(config);
  else if (c == "bary-c")
    body = run_bary_c(config);
  else if (c == "bary-anticausal")
    body = run_bary_anticausal(config);
  else if (c == "match")
    body = run_match(config);
  else if (c == "verify-coupling")
    body = run_verify(config);
  else if (c == "counterexample")
    body = run_counterexample(config);
  else if (c == "random-tree")
    body = run_random_tree(config);
  else
    throw ValidationError("unknown command \"" + c + "\"");
  if (config.timing) {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    body["timing"] = Json{{"seconds", secs}};
  }
  return SolveReport{std::move(body)};
}

std::string SolveReport::text() const {
  std::ostringstream os;
  auto emit = [&](auto&& self, const Json& j, const std::string& prefix) -> void {
    if (j.is_object()) {
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.key() == "certificate" || it.key() == "barycenter" || it.key() == "levels") continue;
        self(self, it.value(), prefix.empty() ? it.key() : prefix + "." + it.key());
      }
    } else if (j.is_array()) {
      bool scalars = true;
      for (const auto& e : j) scalars = scalars && e.is_primitive();
      if (scalars) os << prefix << ": " << j.dump() << "\n";
      else
        for (std::size_t k = 0; k < j.size(); ++k) self(self, j[k], prefix + "[" + std::to_string(k) + "]");
    } else {
      os << prefix << ": " << (j.is_string() ? j.get<std::string>() : j.dump()) << "\n";
    }
  };
  emit(emit, body, "");
  return os.str();
}

int exit_code(const std::exception& error) {
  if (dynamic_cast<const ValidationError*>(&error)) return 2;
  if (dynamic_cast<const BudgetExceeded*>(&error)) return 3;
  if (dynamic_cast<const SolverError*>(&error)) return 4;
  if (dynamic_cast<const nlohmann::json::exception*>(&error)) return 2;
  if (dynamic_cast<const std::invalid_argument*>(&error)) return 2;
  return 1;
}

}  // namespace causalot
