#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace causalot {

/// Values of one process along a full path: entry t-1 is the state at time t.
using Path = std::vector<std::vector<double>>;

/// Exact probability p = num/den, used when a tree is written with
/// rational strings such as "1/3".
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Rational parse(std::string_view text);
  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const;
  Rational operator+(const Rational& other) const;
  bool operator==(const Rational& other) const = default;
};

struct TreeNode {
  std::string id;
  /// Index of the parent in the previous level, -1 at depth 1.
  std::ptrdiff_t parent = -1;
  double prob = 1.0;
  /// Set when the probability was given as an exact fraction.
  std::optional<Rational> exact_prob;
  std::vector<double> value;
};

/// Finite weighted support. `support` holds indices into whatever the
/// distribution lives on (child nodes, leaves, grid points).
struct DiscreteDistribution {
  std::vector<std::size_t> support;
  std::vector<double> weights;

  std::size_t size() const { return support.size(); }
  /// Throws ValidationError unless weights are >= 0, sum to one within `tol`,
  /// and the support indices are distinct.
  void validate(double tol = 1e-12) const;
};

/// A path from depth 1 to depth t, given by node ids.
struct NodePath {
  std::vector<std::string> ids;
};

/// One node per process, all at the same depth.
struct ProductNodeTuple {
  int depth = 0;
  std::vector<std::size_t> nodes;
};

/// A finite filtered process: nodes per time step with transition
/// probabilities and real-vector states. Immutable once built.
///
/// Depths run from 1 to horizon(); node indices are positions within a
/// level in file order.
class ScenarioTree {
public:
  static constexpr double kLocalTolerance = 1e-12;
  static constexpr double kGlobalTolerance = 1e-10;

  /// Validates and indexes the given levels. Throws ValidationError with a
  /// node-level message on any broken invariant.
  static ScenarioTree from_levels(std::vector<std::vector<TreeNode>> levels);

  /// Deterministic path x_1, ..., x_T of scalar states.
  static ScenarioTree deterministic(std::span<const double> values);

  int horizon() const { return static_cast<int>(levels_.size()); }
  std::size_t level_size(int depth) const { return levels_.at(depth - 1).size(); }
  std::size_t num_leaves() const { return levels_.back().size(); }
  std::size_t state_dim(int depth) const { return dims_.at(depth - 1); }
  bool exact() const { return exact_; }

  const TreeNode& node(int depth, std::size_t index) const { return levels_.at(depth - 1).at(index); }
  const std::vector<TreeNode>& level(int depth) const { return levels_.at(depth - 1); }

  /// Children of a node; depth 0 means the virtual root (the depth-1 nodes).
  std::span<const std::size_t> children(int depth, std::size_t index) const;
  /// Index at depth `d` of the ancestor of node (depth, index); d <= depth.
  std::size_t ancestor(int depth, std::size_t index, int d) const;
  /// Probability of reaching node (depth, index) from the root.
  double node_probability(int depth, std::size_t index) const { return path_prob_.at(depth - 1).at(index); }
  double leaf_probability(std::size_t leaf) const { return path_prob_.back().at(leaf); }
  /// Leaf-path law as a distribution over leaf indices.
  DiscreteDistribution leaf_law() const;
  const Path& leaf_path(std::size_t leaf) const { return leaf_paths_.at(leaf); }

  /// Resolve a node path to the index of its terminal node. Throws
  /// ValidationError if ids are unknown or not parent-linked.
  std::size_t resolve(const NodePath& path) const;
  NodePath path_to(int depth, std::size_t index) const;
  std::optional<std::size_t> find(int depth, std::string_view id) const;

private:
  std::vector<std::vector<TreeNode>> levels_;
  std::vector<std::size_t> dims_;
  std::vector<std::size_t> roots_;
  std::vector<std::vector<std::vector<std::size_t>>> children_;
  std::vector<std::vector<double>> path_prob_;
  std::vector<Path> leaf_paths_;
  std::vector<std::unordered_map<std::string, std::size_t>> ids_;
  bool exact_ = false;
};

/// Kernel P_{t+1, omega_{1:t}}: transition probabilities of the children of
/// the path's terminal node. Throws ValidationError at depth T.
DiscreteDistribution conditional_kernel(const ScenarioTree& tree, const NodePath& path);

/// States (x_1, ..., x_T) along a full leaf path. Throws ValidationError for
/// paths shorter than the horizon.
Path path_value(const ScenarioTree& tree, const NodePath& leaf);

/// Parse the JSON tree format
/// {"horizon": T, "levels": [[{"id","parent","p","x"}, ...], ...]}.
ScenarioTree load_tree(std::string_view serialized);
ScenarioTree load_tree_file(const std::string& path);
std::string serialize_tree(const ScenarioTree& tree);

}  // namespace causalot
