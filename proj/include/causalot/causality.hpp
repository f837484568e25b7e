#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "causalot/scenario_tree.hpp"

namespace causalot {

/// Mixed-radix indexing of tuples (k_1, ..., k_N) with k_i < dims[i],
/// first coordinate slowest.
class TupleSpace {
public:
  TupleSpace() = default;
  explicit TupleSpace(std::vector<std::size_t> dims);

  std::size_t size() const { return size_; }
  std::size_t rank() const { return dims_.size(); }
  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t encode(std::span<const std::size_t> tuple) const;
  void decode(std::size_t flat, std::span<std::size_t> out) const;
  std::vector<std::size_t> decode(std::size_t flat) const;

private:
  std::vector<std::size_t> dims_;
  std::size_t size_ = 1;
};

/// Identifies one indicator test function: coordinate `coord` takes the step
/// from its node `parent` (depth t-1) to `own` (depth t) while the other
/// coordinates sit at nodes `others` at depth t-1.
struct CausalityKey {
  std::size_t coord = 0;
  int step_time = 0;
  std::vector<std::size_t> others;
  std::size_t own = 0;
};

/// The finite family of test functions
///   F = 1{others = A, own_t = b} - P(b | parent) 1{others = A, own_{t-1} = parent}
/// for each constrained coordinate i, step t = 2..T, atom (A, b). A measure
/// on leaf tuples is causal in the constrained coordinates exactly when all
/// of them integrate to zero.
///
/// With `drop_last_child` the last child of every sibling group is omitted
/// (its function is minus the sum of its siblings'), which removes the
/// linear dependence when the family is used as LP rows.
class CausalityFamily {
public:
  CausalityFamily(std::vector<const ScenarioTree*> trees, std::vector<std::size_t> constrained, bool drop_last_child);

  std::size_t num_functions() const { return total_; }
  /// Calls emit(function_index, coefficient) for every function that is
  /// nonzero at the given leaf tuple. An index may repeat; coefficients add.
  template <class Emit>
  void for_each_term(std::span<const std::size_t> leaves, Emit&& emit) const;

  CausalityKey key(std::size_t function) const;
  /// "process i, t=..., others (...), own '...'" with node ids.
  std::string describe(std::size_t function) const;

  /// Index of the (coord, t, A, b) function, or npos if b is a dropped child.
  std::size_t index(std::size_t block, std::size_t others_flat, std::size_t own) const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
  struct Block {
    std::size_t coord = 0;
    int t = 0;
    std::size_t base = 0;
    TupleSpace others;
    std::vector<std::size_t> other_coords;
  };

  std::vector<const ScenarioTree*> trees_;
  std::vector<Block> blocks_;
  // slot_[coord][t-1][b]: position of node b among the kept nodes at depth t.
  std::vector<std::vector<std::vector<std::size_t>>> slot_;
  std::vector<std::vector<std::size_t>> slots_;
  // kept_[coord][t-1][slot]: inverse of slot_.
  std::vector<std::vector<std::vector<std::size_t>>> kept_;
  std::size_t total_ = 0;
  int horizon_ = 0;
};

template <class Emit>
void CausalityFamily::for_each_term(std::span<const std::size_t> leaves, Emit&& emit) const {
  std::vector<std::size_t> others_nodes;
  for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
    const Block& blk = blocks_[bi];
    const int t = blk.t;
    others_nodes.resize(blk.other_coords.size());
    for (std::size_t k = 0; k < blk.other_coords.size(); ++k) {
      const std::size_t j = blk.other_coords[k];
      others_nodes[k] = trees_[j]->ancestor(horizon_, leaves[j], t - 1);
    }
    const std::size_t a_flat = blk.others.encode(others_nodes);
    const ScenarioTree& tree = *trees_[blk.coord];
    const std::size_t b = tree.ancestor(horizon_, leaves[blk.coord], t);
    const std::size_t p = static_cast<std::size_t>(tree.node(t, b).parent);
    const auto& slot = slot_[blk.coord][t - 1];
    const std::size_t stride = slots_[blk.coord][t - 1];
    const std::size_t row0 = blk.base + a_flat * stride;
    if (slot[b] != npos) emit(row0 + slot[b], 1.0);
    for (std::size_t c : tree.children(t - 1, p))
      if (slot[c] != npos) emit(row0 + slot[c], -tree.node(t, c).prob);
  }
}

}  // namespace causalot
