#include "causalot/causality.hpp"

#include <sstream>

#include "causalot/errors.hpp"

namespace causalot {

TupleSpace::TupleSpace(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
  size_ = 1;
  for (std::size_t d : dims_) size_ *= d;
}

std::size_t TupleSpace::encode(std::span<const std::size_t> tuple) const {
  std::size_t flat = 0;
  for (std::size_t a = 0; a < dims_.size(); ++a) flat = flat * dims_[a] + tuple[a];
  return flat;
}

void TupleSpace::decode(std::size_t flat, std::span<std::size_t> out) const {
  for (std::size_t a = dims_.size(); a-- > 0;) {
    out[a] = flat % dims_[a];
    flat /= dims_[a];
  }
}

std::vector<std::size_t> TupleSpace::decode(std::size_t flat) const {
  std::vector<std::size_t> out(dims_.size());
  decode(flat, out);
  return out;
}

CausalityFamily::CausalityFamily(std::vector<const ScenarioTree*> trees, std::vector<std::size_t> constrained,
                                 bool drop_last_child)
    : trees_(std::move(trees)) {
  if (trees_.empty()) throw ValidationError("causality family needs at least one tree");
  horizon_ = trees_[0]->horizon();
  for (const ScenarioTree* t : trees_)
    if (t->horizon() != horizon_) throw ValidationError("trees have different horizons");

  const std::size_t n = trees_.size();
  slot_.resize(n);
  slots_.resize(n);
  kept_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const ScenarioTree& tree = *trees_[i];
    slot_[i].resize(horizon_);
    slots_[i].resize(horizon_, 0);
    kept_[i].resize(horizon_);
    for (int t = 2; t <= horizon_; ++t) {
      auto& slot = slot_[i][t - 1];
      slot.assign(tree.level_size(t), npos);
      for (std::size_t p = 0; p < tree.level_size(t - 1); ++p) {
        auto kids = tree.children(t - 1, p);
        const std::size_t keep = drop_last_child ? kids.size() - 1 : kids.size();
        for (std::size_t k = 0; k < keep; ++k) {
          slot[kids[k]] = kept_[i][t - 1].size();
          kept_[i][t - 1].push_back(kids[k]);
        }
      }
      slots_[i][t - 1] = kept_[i][t - 1].size();
    }
  }

  for (std::size_t i : constrained) {
    if (i >= n) throw ValidationError("constrained coordinate out of range");
    for (int t = 2; t <= horizon_; ++t) {
      Block blk;
      blk.coord = i;
      blk.t = t;
      blk.base = total_;
      std::vector<std::size_t> dims;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        blk.other_coords.push_back(j);
        dims.push_back(trees_[j]->level_size(t - 1));
      }
      blk.others = TupleSpace(std::move(dims));
      total_ += blk.others.size() * slots_[i][t - 1];
      blocks_.push_back(std::move(blk));
    }
  }
}

std::size_t CausalityFamily::index(std::size_t block, std::size_t others_flat, std::size_t own) const {
  const Block& blk = blocks_.at(block);
  const std::size_t s = slot_[blk.coord][blk.t - 1].at(own);
  if (s == npos) return npos;
  return blk.base + others_flat * slots_[blk.coord][blk.t - 1] + s;
}

CausalityKey CausalityFamily::key(std::size_t function) const {
  if (function >= total_) throw ValidationError("test function index out of range");
  std::size_t bi = blocks_.size() - 1;
  while (blocks_[bi].base > function) --bi;
  const Block& blk = blocks_[bi];
  const std::size_t stride = slots_[blk.coord][blk.t - 1];
  const std::size_t local = function - blk.base;
  CausalityKey k;
  k.coord = blk.coord;
  k.step_time = blk.t;
  k.others = blk.others.decode(local / stride);
  k.own = kept_[blk.coord][blk.t - 1][local % stride];
  return k;
}

std::string CausalityFamily::describe(std::size_t function) const {
  CausalityKey k = key(function);
  const Block* blk = nullptr;
  for (const Block& b : blocks_)
    if (b.coord == k.coord && b.t == k.step_time) blk = &b;
  std::ostringstream os;
  os << "process " << k.coord << ", t=" << k.step_time << ", others at t=" << k.step_time - 1 << " (";
  for (std::size_t m = 0; m < k.others.size(); ++m) {
    if (m) os << ", ";
    os << "'" << trees_[blk->other_coords[m]]->node(k.step_time - 1, k.others[m]).id << "'";
  }
  os << "), own '" << trees_[k.coord]->node(k.step_time, k.own).id << "'";
  return os.str();
}

}  // namespace causalot
