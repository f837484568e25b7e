#include "causalot/scenario_tree.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "causalot/errors.hpp"

namespace causalot {

namespace {

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t out = 0;
  if (__builtin_mul_overflow(a, b, &out)) throw ValidationError("rational probability overflow");
  return out;
}

std::string where(int depth, const std::string& id) {
  return "node '" + id + "' at depth " + std::to_string(depth);
}

}  // namespace

Rational Rational::parse(std::string_view text) {
  auto slash = text.find('/');
  Rational r;
  try {
    if (slash == std::string_view::npos) {
      r.num = std::stoll(std::string(text));
      r.den = 1;
    } else {
      r.num = std::stoll(std::string(text.substr(0, slash)));
      r.den = std::stoll(std::string(text.substr(slash + 1)));
    }
  } catch (const std::exception&) {
    throw ValidationError("cannot parse probability '" + std::string(text) + "'");
  }
  if (r.den <= 0) throw ValidationError("nonpositive denominator in '" + std::string(text) + "'");
  auto g = std::gcd(r.num, r.den);
  if (g != 0) {
    r.num /= g;
    r.den /= g;
  }
  return r;
}

std::string Rational::str() const {
  return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
}

Rational Rational::operator+(const Rational& other) const {
  auto g = std::gcd(den, other.den);
  Rational r;
  r.den = checked_mul(den / g, other.den);
  std::int64_t lhs = checked_mul(num, other.den / g);
  std::int64_t rhs = checked_mul(other.num, den / g);
  if (__builtin_add_overflow(lhs, rhs, &r.num)) throw ValidationError("rational probability overflow");
  auto h = std::gcd(r.num, r.den);
  if (h != 0) {
    r.num /= h;
    r.den /= h;
  }
  return r;
}

void DiscreteDistribution::validate(double tol) const {
  if (support.size() != weights.size()) throw ValidationError("support/weights length mismatch");
  if (support.empty()) throw ValidationError("empty distribution");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ValidationError("negative or NaN weight");
    total += w;
  }
  if (std::abs(total - 1.0) > tol) {
    std::ostringstream os;
    os << "weights sum to " << total;
    throw ValidationError(os.str());
  }
  std::vector<std::size_t> sorted = support;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw ValidationError("repeated support index");
}

ScenarioTree ScenarioTree::from_levels(std::vector<std::vector<TreeNode>> levels) {
  if (levels.empty()) throw ValidationError("tree horizon must be >= 1");
  ScenarioTree tree;
  const int horizon = static_cast<int>(levels.size());
  tree.levels_ = std::move(levels);
  tree.children_.resize(horizon);
  tree.ids_.resize(horizon);
  tree.path_prob_.resize(horizon);
  tree.exact_ = true;

  for (int d = 1; d <= horizon; ++d) {
    const auto& level = tree.levels_[d - 1];
    if (level.empty()) throw ValidationError("level " + std::to_string(d) + " is empty");
    tree.dims_.push_back(level.front().value.size());
    tree.children_[d - 1].resize(level.size());
    for (std::size_t k = 0; k < level.size(); ++k) {
      const TreeNode& n = level[k];
      if (!tree.ids_[d - 1].emplace(n.id, k).second)
        throw ValidationError("duplicate id: " + where(d, n.id));
      if (n.value.size() != tree.dims_[d - 1])
        throw ValidationError("state dimension differs from the level's: " + where(d, n.id));
      for (double v : n.value)
        if (!std::isfinite(v)) throw ValidationError("non-finite state: " + where(d, n.id));
      if (!(n.prob > 0.0) || n.prob > 1.0 + kLocalTolerance)
        throw ValidationError("probability must lie in (0,1]: " + where(d, n.id));
      if (!n.exact_prob) tree.exact_ = false;
      if (d == 1) {
        if (n.parent != -1) throw ValidationError("depth-1 node has a parent: " + where(d, n.id));
        tree.roots_.push_back(k);
      } else {
        if (n.parent < 0 || static_cast<std::size_t>(n.parent) >= tree.levels_[d - 2].size())
          throw ValidationError("orphan " + where(d, n.id));
        tree.children_[d - 2][n.parent].push_back(k);
      }
    }
  }

  auto check_group = [&](int d, std::span<const std::size_t> group, const std::string& owner) {
    const auto& level = tree.levels_[d - 1];
    if (group.empty()) throw ValidationError(owner + " has no children");
    double total = 0.0;
    for (auto k : group) total += level[k].prob;
    bool exact_group = std::all_of(group.begin(), group.end(), [&](auto k) { return level[k].exact_prob.has_value(); });
    if (exact_group) {
      Rational sum{0, 1};
      for (auto k : group) sum = sum + *level[k].exact_prob;
      if (!(sum == Rational{1, 1}))
        throw ValidationError("children of " + owner + " sum " + sum.str() + " (exact)");
    } else if (std::abs(total - 1.0) > kLocalTolerance) {
      std::ostringstream os;
      os.precision(15);
      os << "children of " << owner << " sum " << total;
      throw ValidationError(os.str());
    }
  };
  check_group(1, tree.roots_, "the root");
  for (int d = 1; d < horizon; ++d)
    for (std::size_t k = 0; k < tree.levels_[d - 1].size(); ++k)
      check_group(d + 1, tree.children_[d - 1][k], where(d, tree.levels_[d - 1][k].id));

  for (int d = 1; d <= horizon; ++d) {
    const auto& level = tree.levels_[d - 1];
    auto& probs = tree.path_prob_[d - 1];
    probs.resize(level.size());
    for (std::size_t k = 0; k < level.size(); ++k)
      probs[k] = level[k].prob * (d == 1 ? 1.0 : tree.path_prob_[d - 2][level[k].parent]);
  }
  double total = std::accumulate(tree.path_prob_.back().begin(), tree.path_prob_.back().end(), 0.0);
  if (std::abs(total - 1.0) > kGlobalTolerance) throw ValidationError("leaf probabilities sum to " + std::to_string(total));

  tree.leaf_paths_.resize(tree.num_leaves());
  for (std::size_t leaf = 0; leaf < tree.num_leaves(); ++leaf) {
    Path path(horizon);
    std::size_t k = leaf;
    for (int d = horizon; d >= 1; --d) {
      path[d - 1] = tree.levels_[d - 1][k].value;
      if (d > 1) k = static_cast<std::size_t>(tree.levels_[d - 1][k].parent);
    }
    tree.leaf_paths_[leaf] = std::move(path);
  }
  return tree;
}

ScenarioTree ScenarioTree::deterministic(std::span<const double> values) {
  std::vector<std::vector<TreeNode>> levels;
  for (std::size_t t = 0; t < values.size(); ++t) {
    TreeNode n;
    n.id = "n" + std::to_string(t + 1);
    n.parent = t == 0 ? -1 : 0;
    n.prob = 1.0;
    n.exact_prob = Rational{1, 1};
    n.value = {values[t]};
    levels.push_back({n});
  }
  return from_levels(std::move(levels));
}

std::span<const std::size_t> ScenarioTree::children(int depth, std::size_t index) const {
  if (depth == 0) return roots_;
  return children_.at(depth - 1).at(index);
}

std::size_t ScenarioTree::ancestor(int depth, std::size_t index, int d) const {
  while (depth > d) {
    index = static_cast<std::size_t>(levels_[depth - 1][index].parent);
    --depth;
  }
  return index;
}

DiscreteDistribution ScenarioTree::leaf_law() const {
  DiscreteDistribution law;
  law.support.resize(num_leaves());
  std::iota(law.support.begin(), law.support.end(), std::size_t{0});
  law.weights = path_prob_.back();
  return law;
}

std::optional<std::size_t> ScenarioTree::find(int depth, std::string_view id) const {
  if (depth < 1 || depth > horizon()) return std::nullopt;
  auto it = ids_[depth - 1].find(std::string(id));
  if (it == ids_[depth - 1].end()) return std::nullopt;
  return it->second;
}

std::size_t ScenarioTree::resolve(const NodePath& path) const {
  if (path.ids.empty() || static_cast<int>(path.ids.size()) > horizon())
    throw ValidationError("node path length must be in 1..horizon");
  std::size_t prev = 0;
  for (std::size_t t = 0; t < path.ids.size(); ++t) {
    int depth = static_cast<int>(t) + 1;
    auto k = find(depth, path.ids[t]);
    if (!k) throw ValidationError("unknown node '" + path.ids[t] + "' at depth " + std::to_string(depth));
    if (depth > 1 && static_cast<std::size_t>(levels_[depth - 1][*k].parent) != prev)
      throw ValidationError("node '" + path.ids[t] + "' is not a child of '" + path.ids[t - 1] + "'");
    prev = *k;
  }
  return prev;
}

NodePath ScenarioTree::path_to(int depth, std::size_t index) const {
  NodePath p;
  p.ids.resize(depth);
  for (int d = depth; d >= 1; --d) {
    p.ids[d - 1] = levels_[d - 1][index].id;
    if (d > 1) index = static_cast<std::size_t>(levels_[d - 1][index].parent);
  }
  return p;
}

DiscreteDistribution conditional_kernel(const ScenarioTree& tree, const NodePath& path) {
  std::size_t k = tree.resolve(path);
  int depth = static_cast<int>(path.ids.size());
  if (depth >= tree.horizon()) throw ValidationError("path at depth T has no conditional kernel");
  DiscreteDistribution out;
  for (auto c : tree.children(depth, k)) {
    out.support.push_back(c);
    out.weights.push_back(tree.node(depth + 1, c).prob);
  }
  return out;
}

Path path_value(const ScenarioTree& tree, const NodePath& leaf) {
  std::size_t k = tree.resolve(leaf);
  if (static_cast<int>(leaf.ids.size()) != tree.horizon()) throw ValidationError("path_value needs a full leaf path");
  return tree.leaf_path(k);
}

ScenarioTree load_tree(std::string_view serialized) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(serialized);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("tree parse error: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("levels") || !doc["levels"].is_array())
    throw ValidationError("tree document needs a \"levels\" array");
  const auto& jlevels = doc["levels"];
  if (doc.contains("horizon") && doc["horizon"].get<long>() != static_cast<long>(jlevels.size()))
    throw ValidationError("horizon does not match the number of levels");

  std::vector<std::vector<TreeNode>> levels(jlevels.size());
  for (std::size_t t = 0; t < jlevels.size(); ++t) {
    std::unordered_map<std::string, std::size_t> prev_ids;
    if (t > 0)
      for (std::size_t k = 0; k < levels[t - 1].size(); ++k) prev_ids.emplace(levels[t - 1][k].id, k);
    for (const auto& jn : jlevels[t]) {
      TreeNode n;
      try {
        n.id = jn.at("id").get<std::string>();
        const auto& jp = jn.at("p");
        if (jp.is_string()) {
          n.exact_prob = Rational::parse(jp.get<std::string>());
          n.prob = n.exact_prob->to_double();
        } else {
          n.prob = jp.get<double>();
        }
        const auto& jx = jn.at("x");
        if (jx.is_number())
          n.value = {jx.get<double>()};
        else
          n.value = jx.get<std::vector<double>>();
        const auto& jpar = jn.contains("parent") ? jn["parent"] : nlohmann::json();
        if (jpar.is_null()) {
          if (t > 0) throw ValidationError("orphan " + where(static_cast<int>(t) + 1, n.id));
        } else {
          if (t == 0) throw ValidationError("depth-1 node has a parent: " + where(1, n.id));
          auto it = prev_ids.find(jpar.get<std::string>());
          if (it == prev_ids.end())
            throw ValidationError("orphan " + where(static_cast<int>(t) + 1, n.id) + " (unknown parent '" +
                                  jpar.get<std::string>() + "')");
          n.parent = static_cast<std::ptrdiff_t>(it->second);
        }
      } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("tree parse error: ") + e.what());
      }
      levels[t].push_back(std::move(n));
    }
  }
  return ScenarioTree::from_levels(std::move(levels));
}

ScenarioTree load_tree_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_tree(ss.str());
}

std::string serialize_tree(const ScenarioTree& tree) {
  nlohmann::ordered_json doc;
  doc["horizon"] = tree.horizon();
  doc["levels"] = nlohmann::ordered_json::array();
  for (int d = 1; d <= tree.horizon(); ++d) {
    auto jlevel = nlohmann::ordered_json::array();
    for (const auto& n : tree.level(d)) {
      nlohmann::ordered_json jn;
      jn["id"] = n.id;
      jn["parent"] = d == 1 ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(tree.node(d - 1, n.parent).id);
      if (n.exact_prob)
        jn["p"] = n.exact_prob->str();
      else
        jn["p"] = n.prob;
      jn["x"] = n.value;
      jlevel.push_back(std::move(jn));
    }
    doc["levels"].push_back(std::move(jlevel));
  }
  return doc.dump();
}

}  // namespace causalot
