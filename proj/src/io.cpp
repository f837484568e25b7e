#include "causalot/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "causalot/errors.hpp"

namespace causalot {

namespace {

std::vector<double> as_state(const nlohmann::json& v) {
  if (v.is_number()) return {v.get<double>()};
  return v.get<std::vector<double>>();
}

std::vector<std::vector<double>> as_grid(const nlohmann::json& v) {
  std::vector<std::vector<double>> out;
  for (const auto& e : v) out.push_back(as_state(e));
  return out;
}

template <class F>
auto guarded(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

ScenarioTree tree_from_json(const nlohmann::json& node, const std::filesystem::path& base) {
  if (node.is_string()) {
    std::filesystem::path p = node.get<std::string>();
    if (p.is_relative()) p = base / p;
    return load_tree_file(p.string());
  }
  if (!node.is_object()) throw ValidationError("tree must be an object or a file path");
  return load_tree(node.dump());
}

CostTensor cost_tensor_from_json(const nlohmann::json& doc) {
  return guarded("cost tensor", [&] {
    CostTensor t;
    t.dims = doc.at("dims").get<std::vector<std::size_t>>();
    t.data = doc.at("values").get<std::vector<double>>();
    std::size_t expect = 1;
    for (std::size_t d : t.dims) {
      if (d == 0) throw ValidationError("cost tensor has an empty axis");
      expect *= d;
    }
    if (t.data.size() != expect)
      throw ValidationError("cost tensor holds " + std::to_string(t.data.size()) + " values, dims need " +
                            std::to_string(expect));
    for (double v : t.data)
      if (!std::isfinite(v)) throw ValidationError("cost tensor value is not finite");
    return t;
  });
}

SeparableCost separable_cost_from_json(const nlohmann::json& doc, std::size_t processes, int horizon) {
  return guarded("barycenter cost", [&] {
    const std::string kind = doc.at("kind").get<std::string>();
    if (kind == "power") {
      std::vector<double> weights;
      if (doc.contains("weights")) weights = doc["weights"].get<std::vector<double>>();
      return separable_cost_from_spec("power:" + std::to_string(doc.value("p", 2.0)), std::move(weights), processes,
                                      horizon);
    }
    if (kind == "tables") {
      std::vector<std::vector<SeparableCost::Table>> tables;
      for (const auto& jp : doc.at("tables")) {
        auto& row = tables.emplace_back();
        for (const auto& jt : jp) {
          SeparableCost::Table t;
          t.x_grid = as_grid(jt.at("x"));
          t.y_grid = as_grid(jt.at("y"));
          t.values = jt.at("values").get<std::vector<std::vector<double>>>();
          row.push_back(std::move(t));
        }
      }
      if (tables.size() != processes) throw ValidationError("need one table list per process");
      for (const auto& row : tables)
        if (static_cast<int>(row.size()) != horizon) throw ValidationError("need one table per time step");
      return SeparableCost::tables(std::move(tables));
    }
    throw ValidationError("unknown barycenter cost kind \"" + kind + "\"");
  });
}

SeparableCost separable_cost_from_spec(const std::string& spec, std::vector<double> weights, std::size_t processes,
                                       int horizon) {
  const std::string prefix = "power:";
  if (spec.rfind(prefix, 0) != 0) throw ValidationError("barycenter cost must be power:<p> or a JSON file");
  double p = 0.0;
  try {
    p = std::stod(spec.substr(prefix.size()));
  } catch (const std::exception&) {
    throw ValidationError("bad exponent in \"" + spec + "\"");
  }
  if (weights.empty()) weights.assign(processes, 1.0 / static_cast<double>(processes));
  if (weights.size() != processes) throw ValidationError("need one weight per process");
  return SeparableCost::power(p, std::move(weights), horizon);
}

PairCost pair_cost_from_json(const nlohmann::json& doc) {
  return guarded("pair cost", [&] {
    const std::string kind = doc.at("kind").get<std::string>();
    const double scale = doc.value("scale", 1.0);
    if (kind == "power") {
      const double p = doc.value("p", 2.0);
      if (!(p > 0.0)) throw ValidationError("power cost needs p > 0");
      return power_pair_cost(p, scale);
    }
    if (kind == "linear") {
      PairCost c;
      c.name = "linear(" + std::to_string(scale) + ")";
      c.eval = [scale](const Path& x, const Path& y) {
        double s = 0.0;
        for (std::size_t t = 0; t < x.size(); ++t)
          for (std::size_t k = 0; k < x[t].size() && k < y[t].size(); ++k) s += x[t][k] * y[t][k];
        return scale * s;
      };
      return c;
    }
    throw ValidationError("unknown pair cost kind \"" + kind + "\"");
  });
}

MatchingInstance matching_instance_from_json(const nlohmann::json& doc, const std::filesystem::path& base) {
  return guarded("matching instance", [&] {
    const auto& jp = doc.at("principal");
    ScenarioTree principal = tree_from_json(jp.at("tree"), base);
    PairCost utility = pair_cost_from_json(jp.at("utility"));
    std::vector<ScenarioTree> agents;
    std::vector<PairCost> costs;
    for (const auto& ja : doc.at("agents")) {
      agents.push_back(tree_from_json(ja.at("tree"), base));
      costs.push_back(pair_cost_from_json(ja.at("cost")));
    }
    if (agents.empty()) throw ValidationError("at least one agent population is required");
    ScenarioTree tasks = tree_from_json(doc.at("tasks"), base);
    return MatchingInstance(std::move(principal), std::move(utility), std::move(agents), std::move(costs),
                            std::move(tasks));
  });
}

std::vector<std::string> leaf_labels(const ScenarioTree& tree) {
  std::vector<std::string> out;
  for (std::size_t l = 0; l < tree.num_leaves(); ++l) out.push_back(leaf_label(tree, l));
  return out;
}

MulticausalCoupling coupling_from_json(const nlohmann::json& doc, const std::vector<const ScenarioTree*>& trees) {
  return guarded("coupling", [&] {
    std::vector<std::unordered_map<std::string, std::size_t>> lookup(trees.size());
    for (std::size_t i = 0; i < trees.size(); ++i) {
      auto labels = leaf_labels(*trees[i]);
      for (std::size_t l = 0; l < labels.size(); ++l) lookup[i].emplace(labels[l], l);
    }
    std::vector<std::vector<std::size_t>> leaves;
    std::vector<double> weights;
    for (const auto& ja : doc.at("atoms")) {
      const auto& jl = ja.at("leaves");
      if (jl.size() != trees.size()) throw ValidationError("coupling atom arity differs from the tree count");
      std::vector<std::size_t> tuple;
      for (std::size_t i = 0; i < trees.size(); ++i) {
        if (jl[i].is_number_unsigned()) {
          const std::size_t l = jl[i].get<std::size_t>();
          if (l >= trees[i]->num_leaves()) throw ValidationError("leaf index out of range");
          tuple.push_back(l);
        } else {
          const auto label = jl[i].get<std::string>();
          auto it = lookup[i].find(label);
          if (it == lookup[i].end()) throw ValidationError("unknown leaf path \"" + label + "\"");
          tuple.push_back(it->second);
        }
      }
      const double w = ja.at("weight").get<double>();
      if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("coupling weight must be finite and >= 0");
      leaves.push_back(std::move(tuple));
      weights.push_back(w);
    }
    return canonicalize(std::move(leaves), std::move(weights));
  });
}

Json coupling_to_json(const MulticausalCoupling& coupling, const std::vector<const ScenarioTree*>& trees) {
  Json atoms = Json::array();
  for (std::size_t k = 0; k < coupling.size(); ++k) {
    Json labels = Json::array();
    for (std::size_t i = 0; i < trees.size(); ++i) labels.push_back(leaf_label(*trees[i], coupling.leaves[k][i]));
    atoms.push_back(Json{{"leaves", std::move(labels)}, {"weight", coupling.weights[k]}});
  }
  return Json{{"atoms", std::move(atoms)}};
}

Json certificate_to_json(const DualCertificate& cert, const std::vector<const ScenarioTree*>& trees) {
  Json out;
  Json pots = Json::array();
  for (std::size_t i = 0; i < cert.potentials.size(); ++i) pots.push_back(by_leaf(*trees[i], cert.potentials[i]));
  out["potentials"] = std::move(pots);
  Json blocks = Json::array();
  std::vector<std::size_t> others;
  for (const auto& b : cert.blocks) {
    const ScenarioTree& own = *trees[b.process];
    const std::size_t width = own.level_size(b.step_time);
    Json entries = Json::array();
    for (std::size_t a = 0; a < b.others.size(); ++a) {
      others.resize(b.other_coords.size());
      b.others.decode(a, others);
      for (std::size_t o = 0; o < width; ++o) {
        const double v = b.coefficients[a * width + o];
        if (v == 0.0) continue;
        Json ids = Json::array();
        for (std::size_t k = 0; k < others.size(); ++k)
          ids.push_back(trees[b.other_coords[k]]->node(b.step_time - 1, others[k]).id);
        entries.push_back(Json{{"others", std::move(ids)}, {"own", own.node(b.step_time, o).id}, {"a", v}});
      }
    }
    blocks.push_back(Json{{"process", b.process},
                          {"step_time", b.step_time},
                          {"other_processes", b.other_coords},
                          {"coefficients", std::move(entries)}});
  }
  out["test_functions"] = std::move(blocks);
  out["dual_value"] = cert.dual_value;
  return out;
}

Json causality_to_json(const CausalityReport& report) {
  Json out{{"pass", report.pass}, {"worst_violation", report.worst_violation}};
  Json ws = Json::array();
  for (const auto& w : report.witnesses)
    ws.push_back(Json{{"process", w.process},
                      {"step_time", w.step_time},
                      {"info_time", w.info_time},
                      {"others", w.others},
                      {"own", w.own},
                      {"value", w.value},
                      {"description", w.description}});
  out["witnesses"] = std::move(ws);
  return out;
}

Json plan_to_json(const TransportPlan& plan, const ScenarioTree& x, const ScenarioTree& y) {
  Json atoms = Json::array();
  for (std::size_t k = 0; k < plan.atoms.size(); ++k)
    atoms.push_back(Json{{"leaves", {leaf_label(x, plan.atoms[k][0]), leaf_label(y, plan.atoms[k][1])}},
                         {"weight", plan.weights[k]}});
  return Json{{"atoms", std::move(atoms)}};
}

Json by_leaf(const ScenarioTree& tree, const std::vector<double>& values) {
  Json out = Json::object();
  for (std::size_t l = 0; l < values.size(); ++l) out[leaf_label(tree, l)] = values[l];
  return out;
}

Json tree_to_json(const ScenarioTree& tree) { return Json::parse(serialize_tree(tree)); }

}  // namespace causalot
