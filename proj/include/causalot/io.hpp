#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "causalot/barycenters.hpp"
#include "causalot/matching.hpp"
#include "causalot/multicausal.hpp"
#include "causalot/scenario_tree.hpp"
#include "causalot/transport.hpp"

namespace causalot {

using Json = nlohmann::ordered_json;

/// Reads and parses a JSON file; ValidationError on failure.
nlohmann::json read_json_file(const std::filesystem::path& path);

/// A tree given inline as an object or as a path relative to `base`.
ScenarioTree tree_from_json(const nlohmann::json& node, const std::filesystem::path& base);

/// {"dims": [...], "values": [...]} with axis 0 slowest.
CostTensor cost_tensor_from_json(const nlohmann::json& doc);

/// Separable barycenter cost:
///   {"kind": "power", "p": 2, "weights": [...]}
///   {"kind": "tables", "tables": [[{"x": [...], "y": [...], "values": [[...]]}, ...], ...]}
/// Table grids may list scalars or vectors.
SeparableCost separable_cost_from_json(const nlohmann::json& doc, std::size_t processes, int horizon);

/// "power:<p>" with the given weights (equal weights when empty).
SeparableCost separable_cost_from_spec(const std::string& spec, std::vector<double> weights, std::size_t processes,
                                       int horizon);

/// {"kind": "power", "p": 2, "scale": s} gives s * sum_t |x_t - y_t|^p;
/// {"kind": "linear", "scale": s} gives s * sum_t <x_t, y_t>.
PairCost pair_cost_from_json(const nlohmann::json& doc);

/// {"principal": {"tree", "utility"}, "agents": [{"tree", "cost"}, ...], "tasks": tree}.
MatchingInstance matching_instance_from_json(const nlohmann::json& doc, const std::filesystem::path& base);

/// {"atoms": [{"leaves": [label or index, ...], "weight": w}, ...]}; labels are
/// "id1/id2/.../idT" leaf paths.
MulticausalCoupling coupling_from_json(const nlohmann::json& doc, const std::vector<const ScenarioTree*>& trees);

std::vector<std::string> leaf_labels(const ScenarioTree& tree);

Json coupling_to_json(const MulticausalCoupling& coupling, const std::vector<const ScenarioTree*>& trees);
Json certificate_to_json(const DualCertificate& cert, const std::vector<const ScenarioTree*>& trees);
Json causality_to_json(const CausalityReport& report);
/// Plan over (leaves of x, leaves of y) with atoms as label pairs.
Json plan_to_json(const TransportPlan& plan, const ScenarioTree& x, const ScenarioTree& y);
/// Leaf-indexed vector as an object keyed by leaf labels.
Json by_leaf(const ScenarioTree& tree, const std::vector<double>& values);
Json tree_to_json(const ScenarioTree& tree);

}  // namespace causalot
