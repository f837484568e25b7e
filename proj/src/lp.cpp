#include "causalot/lp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <tuple>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "causalot/errors.hpp"

namespace causalot {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

// A stored by columns. Column j >= n is the artificial unit column of row j - n.
struct Csc {
  std::size_t m = 0;
  std::size_t n = 0;
  std::vector<std::size_t> start;
  std::vector<std::size_t> row;
  std::vector<double> val;

  double dot(std::size_t j, const Eigen::VectorXd& y) const {
    if (j >= n) return y(j - n);
    double s = 0.0;
    for (std::size_t k = start[j]; k < start[j + 1]; ++k) s += val[k] * y(row[k]);
    return s;
  }
  void load(std::size_t j, Eigen::VectorXd& out) const {
    out.setZero(m);
    if (j >= n) {
      out(j - n) = 1.0;
      return;
    }
    for (std::size_t k = start[j]; k < start[j + 1]; ++k) out(row[k]) = val[k];
  }
};

// Sparse LU of the basis matrix followed by product-form eta updates.
class BasisFactor {
 public:
  bool factor(const Csc& a, const std::vector<std::size_t>& basis) {
    etas_.clear();
    if (a.m == 0) return true;
    const auto m = static_cast<Eigen::Index>(a.m);
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t r = 0; r < a.m; ++r) {
      const std::size_t j = basis[r];
      const auto col = static_cast<Eigen::Index>(r);
      if (j >= a.n) {
        trip.emplace_back(static_cast<Eigen::Index>(j - a.n), col, 1.0);
        continue;
      }
      for (std::size_t k = a.start[j]; k < a.start[j + 1]; ++k)
        trip.emplace_back(static_cast<Eigen::Index>(a.row[k]), col, a.val[k]);
    }
    Eigen::SparseMatrix<double> bm(m, m);
    bm.setFromTriplets(trip.begin(), trip.end());
    bm.makeCompressed();
    lu_.analyzePattern(bm);
    lu_.factorize(bm);
    if (lu_.info() != Eigen::Success) return false;
    // Cheap conditioning probe: solve against B * 1 and compare.
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(m);
    Eigen::VectorXd rhs = bm * ones;
    Eigen::VectorXd back = lu_.solve(rhs);
    return (back - ones).cwiseAbs().maxCoeff() < 1e-6;
  }

  void ftran(Eigen::VectorXd& v) const {
    if (v.size() == 0) return;
    v = lu_.solve(v).eval();
    for (const Eta& e : etas_) {
      const double vr = v(e.r) / e.pivot;
      if (vr != 0.0)
        for (const auto& [i, a] : e.nz) v(i) -= a * vr;
      v(e.r) = vr;
    }
  }

  void btran(Eigen::VectorXd& v) const {
    if (v.size() == 0) return;
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      double s = v(it->r);
      for (const auto& [i, a] : it->nz) s -= a * v(i);
      v(it->r) = s / it->pivot;
    }
    v = lu_.transpose().solve(v).eval();
  }

  // Column r of the basis is replaced by a column whose FTRAN image is alpha.
  void update(std::size_t r, const Eigen::VectorXd& alpha) {
    Eta e;
    e.r = r;
    e.pivot = alpha(static_cast<Eigen::Index>(r));
    for (Eigen::Index i = 0; i < alpha.size(); ++i)
      if (static_cast<std::size_t>(i) != r && alpha(i) != 0.0) e.nz.emplace_back(i, alpha(i));
    etas_.push_back(std::move(e));
  }

  std::size_t updates() const { return etas_.size(); }

 private:
  struct Eta {
    std::size_t r = 0;
    double pivot = 1.0;
    std::vector<std::pair<Eigen::Index, double>> nz;
  };
  mutable Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
  std::vector<Eta> etas_;
};

enum class Step { optimal, unbounded, infeasible, limit, singular };

class Simplex {
 public:
  Simplex(const Csc& a, const Eigen::VectorXd& b, const LpOptions& opt, double primal_tol, double price_tol)
      : a_(a), b_(b), rhs_(b), opt_(opt), primal_tol_(primal_tol), price_tol_(price_tol) {
    basis.resize(a.m);
    pos.assign(a.n + a.m, kNone);
    for (std::size_t r = 0; r < a.m; ++r) {
      basis[r] = a.n + r;
      pos[a.n + r] = r;
    }
    xb = b;
    cost.assign(a.n + a.m, 0.0);
  }

  bool refactor() {
    if (!factor_.factor(a_, basis)) return false;
    xb = rhs_;
    factor_.ftran(xb);
    return true;
  }

  Eigen::VectorXd duals() const {
    Eigen::VectorXd y(a_.m);
    for (std::size_t r = 0; r < a_.m; ++r) y(r) = cost[basis[r]];
    factor_.btran(y);
    return y;
  }

  void ftran(Eigen::VectorXd& v) const { factor_.ftran(v); }

  // Row r of B^{-1}.
  Eigen::VectorXd inverse_row(std::size_t r) const {
    Eigen::VectorXd rho = Eigen::VectorXd::Zero(a_.m);
    rho(r) = 1.0;
    factor_.btran(rho);
    return rho;
  }

  void pivot(std::size_t r, std::size_t s, const Eigen::VectorXd& alpha, double theta) {
    xb -= theta * alpha;
    xb(r) = theta;
    pos[basis[r]] = kNone;
    basis[r] = s;
    pos[s] = r;
    factor_.update(r, alpha);
    ++iterations;
  }

  // Primal passes with perturbation on degenerate runs, then dual passes to
  // restore feasibility once the perturbation is removed, until a freshly
  // factored basis needs no pivots. In phase 2 basic artificials stay at 0.
  Step optimize(bool phase2) {
    for (int round = 0; round < 12; ++round) {
      std::size_t moves = 0;
      Step st = primal(phase2, moves);
      if (st != Step::optimal) return st;
      const bool was_perturbed = perturbed_;
      if (perturbed_) {
        rhs_ = b_;
        perturbed_ = false;
      }
      if (!refactor()) return Step::singular;
      std::size_t dual_moves = 0;
      st = dual(phase2, dual_moves);
      if (st != Step::optimal) return st;
      if (dual_moves > 0 && !refactor()) return Step::singular;
      if (moves == 0 && dual_moves == 0 && !was_perturbed) return Step::optimal;
    }
    return Step::limit;
  }

  std::vector<std::size_t> basis;
  std::vector<std::size_t> pos;
  Eigen::VectorXd xb;
  std::vector<double> cost;
  std::size_t iterations = 0;

 private:
  bool pinned(bool phase2, std::size_t i) const { return phase2 && basis[i] >= a_.n; }

  // Shifts every free basic value up by a small random amount, which is the
  // same as solving against a perturbed right-hand side.
  void perturb(bool phase2) {
    std::mt19937_64 rng(0x5eed + perturb_count_++);
    std::uniform_real_distribution<double> u(1.0, 2.0);
    const double eps = 1e-7 * std::max(1.0, b_.size() ? b_.cwiseAbs().maxCoeff() : 0.0);
    Eigen::VectorXd col(a_.m);
    for (std::size_t i = 0; i < a_.m; ++i) {
      if (pinned(phase2, i)) continue;
      const double delta = eps * u(rng);
      xb(i) += delta;
      a_.load(basis[i], col);
      rhs_ += delta * col;
    }
    perturbed_ = true;
  }

  Step primal(bool phase2, std::size_t& moves) {
    std::size_t degenerate = 0;
    Eigen::VectorXd alpha(a_.m);
    while (true) {
      if (iterations >= opt_.max_iterations) return Step::limit;
      if (factor_.updates() >= opt_.refactor_interval && !refactor()) return Step::singular;
      const Eigen::VectorXd y = duals();

      // Dantzig pricing, smallest index among ties.
      std::size_t s = kNone;
      double best = -price_tol_;
      for (std::size_t j = 0; j < a_.n; ++j) {
        if (pos[j] != kNone) continue;
        const double dj = cost[j] - a_.dot(j, y);
        if (dj < best) {
          best = dj;
          s = j;
        }
      }
      if (s == kNone) return Step::optimal;

      a_.load(s, alpha);
      factor_.ftran(alpha);

      // Harris: bound the step with relaxed ratios, then take the largest
      // pivot among the rows blocking within that bound. Pinned artificials
      // block at zero in either direction.
      double bound = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < a_.m; ++i) {
        const double ai = alpha(static_cast<Eigen::Index>(i));
        if (pinned(phase2, i)) {
          if (std::abs(ai) > opt_.pivot_tolerance) bound = std::min(bound, primal_tol_ / std::abs(ai));
        } else if (ai > opt_.pivot_tolerance) {
          bound = std::min(bound, std::max(xb(static_cast<Eigen::Index>(i)) + primal_tol_, 0.0) / ai);
        }
      }
      std::size_t r = kNone;
      double best_rate = 0.0;
      double theta = 0.0;
      for (std::size_t i = 0; i < a_.m; ++i) {
        const double ai = alpha(static_cast<Eigen::Index>(i));
        double rate = 0.0;
        double ratio = 0.0;
        if (pinned(phase2, i)) {
          if (std::abs(ai) <= opt_.pivot_tolerance) continue;
          rate = std::abs(ai);
        } else {
          if (ai <= opt_.pivot_tolerance) continue;
          rate = ai;
          ratio = std::max(xb(static_cast<Eigen::Index>(i)), 0.0) / ai;
          if (ratio > bound) continue;
        }
        if (rate > best_rate) {
          r = i;
          best_rate = rate;
          theta = pinned(phase2, i) ? 0.0 : ratio;
        }
      }
      if (r == kNone) return Step::unbounded;

      if (theta <= 1e-12) {
        if (++degenerate > opt_.degenerate_streak && !perturbed_) {
          perturb(phase2);
          degenerate = 0;
        }
      } else {
        degenerate = 0;
      }
      pivot(r, s, alpha, theta);
      ++moves;
    }
  }

  // Dual simplex from a dual feasible basis: the most negative basic value
  // leaves, Harris ratio test on the reduced costs picks the entering column.
  Step dual(bool phase2, std::size_t& moves) {
    Eigen::VectorXd alpha(a_.m);
    std::vector<double> d(a_.n);
    std::vector<double> row(a_.n);
    while (true) {
      if (iterations >= opt_.max_iterations) return Step::limit;
      if (factor_.updates() >= opt_.refactor_interval && !refactor()) return Step::singular;

      std::size_t r = kNone;
      double worst = -primal_tol_;
      for (std::size_t i = 0; i < a_.m; ++i) {
        if (pinned(phase2, i)) continue;
        if (xb(static_cast<Eigen::Index>(i)) < worst) {
          worst = xb(static_cast<Eigen::Index>(i));
          r = i;
        }
      }
      if (r == kNone) return Step::optimal;

      const Eigen::VectorXd y = duals();
      const Eigen::VectorXd rho = inverse_row(r);
      double bound = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < a_.n; ++j) {
        if (pos[j] != kNone) continue;
        row[j] = a_.dot(j, rho);
        if (row[j] >= -opt_.pivot_tolerance) continue;
        d[j] = cost[j] - a_.dot(j, y);
        bound = std::min(bound, (std::max(d[j], 0.0) + price_tol_) / -row[j]);
      }
      std::size_t q = kNone;
      double best_rate = 0.0;
      for (std::size_t j = 0; j < a_.n; ++j) {
        if (pos[j] != kNone || row[j] >= -opt_.pivot_tolerance) continue;
        if (std::max(d[j], 0.0) / -row[j] > bound) continue;
        if (-row[j] > best_rate) {
          best_rate = -row[j];
          q = j;
        }
      }
      if (q == kNone) return Step::infeasible;

      a_.load(q, alpha);
      factor_.ftran(alpha);
      pivot(r, q, alpha, xb(static_cast<Eigen::Index>(r)) / alpha(static_cast<Eigen::Index>(r)));
      ++moves;
    }
  }

  const Csc& a_;
  const Eigen::VectorXd& b_;
  Eigen::VectorXd rhs_;
  const LpOptions& opt_;
  double primal_tol_;
  double price_tol_;
  bool perturbed_ = false;
  std::uint64_t perturb_count_ = 0;
  BasisFactor factor_;
};

}  // namespace

void LpProblem::validate() const {
  for (double v : objective)
    if (!std::isfinite(v)) throw ValidationError("non-finite objective coefficient");
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (!std::isfinite(rows[r].rhs)) throw ValidationError("non-finite rhs in row " + std::to_string(r));
    for (const auto& [j, v] : rows[r].terms) {
      if (j >= objective.size())
        throw ValidationError("row " + std::to_string(r) + " references undeclared variable " + std::to_string(j));
      if (!std::isfinite(v)) throw ValidationError("non-finite coefficient in row " + std::to_string(r));
    }
  }
}

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
    case LpStatus::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

LpSolution solve_lp(const LpProblem& problem, const LpOptions& opt) {
  problem.validate();
  const std::size_t n = problem.num_vars();
  const std::size_t m = problem.rows.size();
  const std::vector<double>& c = problem.objective;
  std::size_t nnz = 0;
  for (const auto& row : problem.rows) nnz += row.terms.size();
  if (m > kMaxLpRows || nnz > kMaxLpNonzeros)
    throw BudgetExceeded("LP with " + std::to_string(m) + " rows and " + std::to_string(nnz) +
                         " nonzeros exceeds the solver limit");

  Eigen::VectorXd b(m);
  std::vector<double> sign(m, 1.0);
  for (std::size_t r = 0; r < m; ++r) {
    b(r) = problem.rows[r].rhs;
    if (b(r) < 0.0) {
      sign[r] = -1.0;
      b(r) = -b(r);
    }
  }

  // Merge duplicate terms and store by column.
  Csc a;
  a.m = m;
  a.n = n;
  {
    std::vector<std::tuple<std::size_t, std::size_t, double>> trip;
    trip.reserve(nnz);
    for (std::size_t r = 0; r < m; ++r)
      for (const auto& [j, v] : problem.rows[r].terms) trip.emplace_back(j, r, sign[r] * v);
    std::sort(trip.begin(), trip.end(), [](const auto& x, const auto& y) {
      return std::tie(std::get<0>(x), std::get<1>(x)) < std::tie(std::get<0>(y), std::get<1>(y));
    });
    a.start.assign(n + 1, 0);
    for (std::size_t k = 0; k < trip.size();) {
      const auto [j, r, v0] = trip[k];
      double v = v0;
      std::size_t e = k + 1;
      for (; e < trip.size() && std::get<0>(trip[e]) == j && std::get<1>(trip[e]) == r; ++e) v += std::get<2>(trip[e]);
      if (v != 0.0) {
        a.row.push_back(r);
        a.val.push_back(v);
        ++a.start[j + 1];
      }
      k = e;
    }
    for (std::size_t j = 0; j < n; ++j) a.start[j + 1] += a.start[j];
  }

  // Geometric row and column equilibration in powers of two: the solver
  // works on R A C with R b and C c.
  std::vector<double> rs(m, 1.0);
  std::vector<double> cs(n, 1.0);
  {
    const double big = std::numeric_limits<double>::infinity();
    for (int pass = 0; pass < 6; ++pass) {
      std::vector<double> lo(m, big);
      std::vector<double> hi(m, 0.0);
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = a.start[j]; k < a.start[j + 1]; ++k) {
          const double v = std::abs(a.val[k]) * cs[j];
          lo[a.row[k]] = std::min(lo[a.row[k]], v);
          hi[a.row[k]] = std::max(hi[a.row[k]], v);
        }
      for (std::size_t r = 0; r < m; ++r)
        if (hi[r] > 0.0) rs[r] = std::exp2(std::round(-0.5 * std::log2(lo[r] * hi[r])));
      for (std::size_t j = 0; j < n; ++j) {
        double clo = big;
        double chi = 0.0;
        for (std::size_t k = a.start[j]; k < a.start[j + 1]; ++k) {
          const double v = std::abs(a.val[k]) * rs[a.row[k]];
          clo = std::min(clo, v);
          chi = std::max(chi, v);
        }
        if (chi > 0.0) cs[j] = std::exp2(std::round(-0.5 * std::log2(clo * chi)));
      }
    }
  }
  Csc scaled = a;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = a.start[j]; k < a.start[j + 1]; ++k) scaled.val[k] = a.val[k] * rs[a.row[k]] * cs[j];
  Eigen::VectorXd bs(m);
  for (std::size_t r = 0; r < m; ++r) bs(r) = b(r) * rs[r];
  std::vector<double> cscaled(n);
  for (std::size_t j = 0; j < n; ++j) cscaled[j] = c[j] * cs[j];

  LpSolution sol;
  const double bscale = std::max(1.0, b.size() ? b.cwiseAbs().maxCoeff() : 0.0);
  double cscale = 1.0;
  for (double v : c) cscale = std::max(cscale, std::abs(v));
  const double primal_tol = opt.feasibility_tolerance * bscale;
  const double dual_tol = opt.feasibility_tolerance * cscale;
  const double sb = std::max(1.0, bs.size() ? bs.cwiseAbs().maxCoeff() : 0.0);
  double sc = 1.0;
  for (double v : cscaled) sc = std::max(sc, std::abs(v));
  const double scaled_primal_tol = opt.feasibility_tolerance * sb;

  Simplex sx(scaled, bs, opt, scaled_primal_tol, opt.optimality_tolerance * sc);
  if (!sx.refactor()) throw SolverError("identity basis failed to factor");
  auto finish = [&](Step step, const char* phase) {
    sx.iterations = std::max(sx.iterations, sol.iterations);
    sol.iterations = sx.iterations;
    if (step == Step::limit) sol.diagnostics = std::string("iteration limit in ") + phase;
    if (step == Step::singular) sol.diagnostics = std::string("singular basis in ") + phase;
    if (step == Step::infeasible) sol.diagnostics = std::string("dual simplex stalled in ") + phase;
    if (step == Step::unbounded) sol.diagnostics = std::string("unbounded ray in ") + phase;
    return sol;
  };

  // Phase 1: minimize the sum of artificials.
  for (std::size_t r = 0; r < m; ++r) sx.cost[n + r] = 1.0;
  Step step = sx.optimize(false);
  if (step != Step::optimal) return finish(step, "phase 1");
  double infeas = 0.0;
  for (std::size_t r = 0; r < m; ++r)
    if (sx.basis[r] >= n) infeas += std::max(sx.xb(r), 0.0);
  sol.iterations = sx.iterations;
  if (infeas > scaled_primal_tol) {
    sol.status = LpStatus::infeasible;
    std::ostringstream os;
    os << "phase 1 residual " << infeas;
    sol.diagnostics = os.str();
    return sol;
  }

  // Drive basic artificials out where the row allows it; the rest sit on
  // redundant rows.
  Eigen::VectorXd alpha(m);
  for (std::size_t r = 0; r < m; ++r) {
    if (sx.basis[r] < n) continue;
    const Eigen::VectorXd rho = sx.inverse_row(r);
    std::size_t s = kNone;
    double big = 1e-7;
    for (std::size_t j = 0; j < n; ++j) {
      if (sx.pos[j] != kNone) continue;
      const double v = std::abs(scaled.dot(j, rho));
      if (v > big) {
        big = v;
        s = j;
      }
    }
    if (s == kNone) {
      ++sol.redundant_rows;
      continue;
    }
    scaled.load(s, alpha);
    sx.ftran(alpha);
    sx.pivot(r, s, alpha, sx.xb(r) / alpha(r));
  }

  // Phase 2, resumed after a fresh factorization until the basis is stable.
  for (std::size_t r = 0; r < m; ++r) sx.cost[n + r] = 0.0;
  for (std::size_t j = 0; j < n; ++j) sx.cost[j] = cscaled[j];
  if (!sx.refactor()) return finish(Step::singular, "phase 2");
  step = sx.optimize(true);
  if (step == Step::unbounded) {
    sol.iterations = sx.iterations;
    sol.status = LpStatus::unbounded;
    sol.diagnostics = "improving ray found";
    return sol;
  }
  if (step != Step::optimal) return finish(step, "phase 2");
  sol.iterations = sx.iterations;

  const Eigen::VectorXd y = sx.duals();
  sol.x.assign(n, 0.0);
  for (std::size_t r = 0; r < m; ++r)
    if (sx.basis[r] < n) sol.x[sx.basis[r]] = sx.xb(r) * cs[sx.basis[r]];
  // Basic variables at a degenerate vertex come back as rounding noise.
  const double zero_tol = 1e-14 * bscale;
  for (double& v : sol.x)
    if (std::abs(v) <= zero_tol || (v < 0.0 && v >= -primal_tol)) v = 0.0;
  sol.duals.resize(m);
  for (std::size_t r = 0; r < m; ++r) sol.duals[r] = sign[r] * rs[r] * y(r);

  sol.objective = 0.0;
  for (std::size_t j = 0; j < n; ++j) sol.objective += c[j] * sol.x[j];
  sol.dual_objective = 0.0;
  for (std::size_t r = 0; r < m; ++r) sol.dual_objective += problem.rows[r].rhs * sol.duals[r];

  double pres = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    double lhs = 0.0;
    for (const auto& [j, v] : problem.rows[r].terms) lhs += v * sol.x[j];
    pres = std::max(pres, std::abs(lhs - problem.rows[r].rhs));
  }
  for (double v : sol.x) pres = std::max(pres, -v);
  double dres = 0.0;
  std::vector<double> reduced(c);
  for (std::size_t r = 0; r < m; ++r)
    for (const auto& [j, v] : problem.rows[r].terms) reduced[j] -= v * sol.duals[r];
  for (double v : reduced) dres = std::max(dres, -v);
  sol.primal_residual = pres;
  sol.dual_residual = dres;
  sol.gap = std::abs(sol.objective - sol.dual_objective);

  const double gap_tol = 1e-8 * (1.0 + std::abs(sol.objective));
  if (pres <= primal_tol && dres <= dual_tol && sol.gap <= gap_tol) {
    sol.status = LpStatus::optimal;
  } else {
    std::ostringstream os;
    os << "residuals primal " << pres << " dual " << dres << " gap " << sol.gap;
    sol.diagnostics = os.str();
  }
  return sol;
}

LpSolution solve_lp_checked(const LpProblem& problem, const LpOptions& options) {
  LpSolution sol = solve_lp(problem, options);
  if (!sol.optimal()) {
    std::string msg = std::string("LP ") + to_string(sol.status);
    if (!sol.diagnostics.empty()) msg += ": " + sol.diagnostics;
    throw SolverError(msg);
  }
  return sol;
}

}  // namespace causalot
