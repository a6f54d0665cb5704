// Two-phase primal simplex on a compact (dictionary) tableau.
//
// Variables are numbered: structural v_0..v_{N-1}, surplus s_i = G_i v - r_i
// (index N + i) and, during phase 1, a single artificial t (index N + M).
// The dictionary keeps one row per basic variable and one column per nonbasic
// variable:
//
//   x_B = b - T x_N,      z = z0 + d' x_N.
//
// Phase 1 adds t to every initially violated row, pivots it in on the most
// violated one (all rows become feasible) and minimizes t. Free structural
// variables enter in whichever direction improves the objective (their
// column is negated and the flip recorded) and never leave the basis.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "resunit/error.hpp"
#include "resunit/solver.hpp"

namespace resunit {

namespace {

class Dictionary {
 public:
  Dictionary(const LpProblem& p, const SolverConfig& cfg)
      : p_(p), cfg_(cfg), n_(p.num_vars()), m_(p.num_constraints()) {
    is_free_.assign(n_ + m_ + 1, false);
    for (Index j = 0; j < n_; ++j) is_free_[j] = true;
    for (Index j : p.nonneg_vars) is_free_[j] = false;
    flipped_.assign(n_, false);

    table_ = -p.ineq_lhs;
    rhs_ = -p.ineq_rhs;
    basic_.resize(m_);
    for (Index i = 0; i < m_; ++i) basic_[i] = n_ + i;
    nonbasic_.resize(n_);
    for (Index j = 0; j < n_; ++j) nonbasic_[j] = j;
    cost2_ = p.objective;
    cost1_ = Vec::Zero(n_);
    z1_ = 0.0;
    z2_ = 0.0;
  }

  SolveReport run() {
    SolveReport rep;
    const double feas = cfg_.feas_tol * std::max(1.0, p_.ineq_rhs.cwiseAbs().maxCoeff());

    Index worst = -1;
    for (Index i = 0; i < m_; ++i) {
      if (rhs_(i) < -feas && (worst < 0 || rhs_(i) < rhs_(worst))) worst = i;
    }
    if (worst >= 0) {
      add_artificial(feas);
      pivot(worst, artificial_col());
      const SolveStatus st = iterate(cost1_, z1_, /*phase=*/1);
      if (st != SolveStatus::Optimal) return finish(rep, st);
      if (artificial_value() > feas) {
        extract_farkas(rep);
        return finish(rep, SolveStatus::Infeasible);
      }
      drop_artificial();
    }
    if (cost2_.cwiseAbs().maxCoeff() > 0.0) {
      const SolveStatus st = iterate(cost2_, z2_, /*phase=*/2);
      if (st != SolveStatus::Optimal) return finish(rep, st);
      extract_duals(rep);
    } else {
      rep.dual = Vec::Zero(m_);
    }
    return finish(rep, SolveStatus::Optimal);
  }

 private:
  Index artificial_var() const { return n_ + m_; }
  Index artificial_col() const {
    for (std::size_t k = 0; k < nonbasic_.size(); ++k) {
      if (nonbasic_[k] == artificial_var()) return static_cast<Index>(k);
    }
    return -1;
  }

  void add_artificial(double feas) {
    const Index k = table_.cols();
    table_.conservativeResize(Eigen::NoChange, k + 1);
    for (Index i = 0; i < m_; ++i) table_(i, k) = rhs_(i) < -feas ? -1.0 : 0.0;
    nonbasic_.push_back(artificial_var());
    cost1_.conservativeResize(k + 1);
    cost1_.setZero();
    cost1_(k) = 1.0;
    cost2_.conservativeResize(k + 1);
    cost2_(k) = 0.0;
  }

  double artificial_value() const {
    for (Index i = 0; i < m_; ++i) {
      if (basic_[i] == artificial_var()) return std::max(0.0, rhs_(i));
    }
    return 0.0;
  }

  void drop_artificial() {
    for (Index i = 0; i < static_cast<Index>(basic_.size()); ++i) {
      if (basic_[i] != artificial_var()) continue;
      Index best = -1;
      double best_abs = cfg_.pivot_tol;
      for (Index k = 0; k < table_.cols(); ++k) {
        if (std::abs(table_(i, k)) > best_abs) {
          best_abs = std::abs(table_(i, k));
          best = k;
        }
      }
      if (best >= 0) {
        pivot(i, best);
      } else {
        remove_row(i);
      }
      break;
    }
    const Index k = artificial_col();
    if (k >= 0) remove_col(k);
  }

  void remove_row(Index r) {
    const Index rows = table_.rows();
    for (Index i = r; i + 1 < rows; ++i) {
      table_.row(i) = table_.row(i + 1);
      rhs_(i) = rhs_(i + 1);
    }
    table_.conservativeResize(rows - 1, Eigen::NoChange);
    rhs_.conservativeResize(rows - 1);
    basic_.erase(basic_.begin() + r);
  }

  void remove_col(Index c) {
    const Index cols = table_.cols();
    for (Index k = c; k + 1 < cols; ++k) {
      table_.col(k) = table_.col(k + 1);
      cost1_(k) = cost1_(k + 1);
      cost2_(k) = cost2_(k + 1);
    }
    table_.conservativeResize(Eigen::NoChange, cols - 1);
    cost1_.conservativeResize(cols - 1);
    cost2_.conservativeResize(cols - 1);
    nonbasic_.erase(nonbasic_.begin() + c);
  }

  void pivot(Index r, Index e) {
    const double piv = table_(r, e);
    const Index cols = table_.cols();
    // Row r now expresses the entering variable.
    rhs_(r) /= piv;
    for (Index k = 0; k < cols; ++k) table_(r, k) = (k == e) ? 1.0 / piv : table_(r, k) / piv;
    const auto pivot_row = table_.row(r);
    for (Index i = 0; i < table_.rows(); ++i) {
      if (i == r) continue;
      const double f = table_(i, e);
      if (f == 0.0) continue;
      rhs_(i) -= f * rhs_(r);
      for (Index k = 0; k < cols; ++k) {
        if (k == e) {
          table_(i, k) = -f * pivot_row(k);
        } else {
          table_(i, k) -= f * pivot_row(k);
        }
      }
    }
    update_cost(cost1_, z1_, r, e);
    update_cost(cost2_, z2_, r, e);
    std::swap(basic_[r], nonbasic_[e]);
    ++iterations_;
  }

  void update_cost(Vec& cost, double& z0, Index r, Index e) {
    const double de = cost(e);
    if (de == 0.0) return;
    z0 += de * rhs_(r);
    for (Index k = 0; k < table_.cols(); ++k) {
      cost(k) = (k == e) ? -de * table_(r, k) : cost(k) - de * table_(r, k);
    }
  }

  void flip(Index k) {
    table_.col(k) *= -1.0;
    cost1_(k) = -cost1_(k);
    cost2_(k) = -cost2_(k);
    const Index var = nonbasic_[k];
    flipped_[var] = !flipped_[var];
  }

  Index choose_entering(Vec& cost, double tol) {
    Index best = -1;
    double best_score = 0.0;
    for (Index k = 0; k < table_.cols(); ++k) {
      const Index var = nonbasic_[k];
      const double dk = cost(k);
      const bool free = is_free_[var];
      const bool eligible = free ? std::abs(dk) > tol : dk < -tol;
      if (!eligible) continue;
      if (bland_) {
        if (best < 0 || var < nonbasic_[best]) best = k;
      } else {
        const double score = std::abs(dk);
        if (best < 0 || score > best_score ||
            (score == best_score && var < nonbasic_[best])) {
          best = k;
          best_score = score;
        }
      }
    }
    if (best >= 0 && cost(best) > 0.0) flip(best);
    return best;
  }

  Index choose_leaving(Index e) const {
    Index best = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < table_.rows(); ++i) {
      const Index var = basic_[i];
      if (var < n_ && is_free_[var]) continue;
      const double a = table_(i, e);
      if (a <= cfg_.pivot_tol) continue;
      const double ratio = std::max(0.0, rhs_(i)) / a;
      if (best < 0 || ratio < best_ratio - 1e-12 * (1.0 + best_ratio)) {
        best = i;
        best_ratio = ratio;
      } else if (ratio <= best_ratio + 1e-12 * (1.0 + best_ratio)) {
        // Ties: lowest variable index under Bland, largest pivot otherwise.
        const bool take = bland_ ? var < basic_[best]
                                 : std::abs(a) > std::abs(table_(best, e));
        if (take) {
          best = i;
          best_ratio = std::min(best_ratio, ratio);
        }
      }
    }
    return best;
  }

  SolveStatus iterate(Vec& cost, double& /*z0*/, int phase) {
    const double tol = 1e-9 * std::max(1.0, cost.cwiseAbs().maxCoeff());
    int degenerate_run = 0;
    for (;;) {
      if (iterations_ >= cfg_.max_iterations) return SolveStatus::IterationLimit;
      const Index e = choose_entering(cost, tol);
      if (e < 0) return SolveStatus::Optimal;
      const Index r = choose_leaving(e);
      if (r < 0) {
        return phase == 1 ? SolveStatus::NumericalTrouble : SolveStatus::Unbounded;
      }
      const bool degenerate = std::max(0.0, rhs_(r)) <= cfg_.pivot_tol;
      degenerate_run = degenerate ? degenerate_run + 1 : 0;
      if (degenerate_run >= cfg_.degenerate_pivots_before_bland) bland_ = true;
      pivot(r, e);
      if (!rhs_.allFinite()) return SolveStatus::NumericalTrouble;
    }
  }

  Vec structural_point() const {
    Vec v = Vec::Zero(n_);
    for (Index i = 0; i < static_cast<Index>(basic_.size()); ++i) {
      const Index var = basic_[i];
      if (var < n_) v(var) = flipped_[var] ? -rhs_(i) : rhs_(i);
    }
    return v;
  }

  // Re-solve the tight constraints of the final basis from the original data.
  Vec refined_point(const Vec& v) const {
    std::vector<Index> basic_struct;
    for (Index var : basic_) {
      if (var < n_) basic_struct.push_back(var);
    }
    std::vector<Index> tight_rows;
    for (Index var : nonbasic_) {
      if (var >= n_ && var < n_ + m_) tight_rows.push_back(var - n_);
    }
    if (basic_struct.empty() || tight_rows.size() != basic_struct.size()) return v;
    const Index k = static_cast<Index>(basic_struct.size());
    Eigen::MatrixXd sys(k, k);
    Eigen::VectorXd rhs(k);
    for (Index a = 0; a < k; ++a) {
      rhs(a) = p_.ineq_rhs(tight_rows[a]);
      for (Index b = 0; b < k; ++b) sys(a, b) = p_.ineq_lhs(tight_rows[a], basic_struct[b]);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(sys);
    if (!lu.isInvertible()) return v;
    const Eigen::VectorXd sol = lu.solve(rhs);
    Vec out = Vec::Zero(n_);
    for (Index b = 0; b < k; ++b) out(basic_struct[b]) = sol(b);
    if (!out.allFinite()) return v;
    return lp_infeasibility(p_, out) <= lp_infeasibility(p_, v) ? out : v;
  }

  void extract_farkas(SolveReport& rep) const {
    Vec y = Vec::Zero(m_);
    for (Index k = 0; k < static_cast<Index>(nonbasic_.size()); ++k) {
      const Index var = nonbasic_[k];
      if (var >= n_ && var < n_ + m_) y(var - n_) = std::max(0.0, cost1_(k));
    }
    const double l1 = y.sum();
    if (l1 > 0.0) y /= l1;
    rep.farkas_ray = y;
  }

  void extract_duals(SolveReport& rep) const {
    Vec y = Vec::Zero(m_);
    for (Index k = 0; k < static_cast<Index>(nonbasic_.size()); ++k) {
      const Index var = nonbasic_[k];
      if (var >= n_ && var < n_ + m_) y(var - n_) = cost2_(k);
    }
    rep.dual = y;
  }

  SolveReport& finish(SolveReport& rep, SolveStatus st) {
    Vec v = structural_point();
    if (st == SolveStatus::Optimal) v = refined_point(v);
    rep.point = v;
    rep.objective_value = p_.objective.dot(v);
    rep.max_infeasibility = lp_infeasibility(p_, v);
    rep.iterations = iterations_;
    rep.status = st;
    if (st == SolveStatus::Optimal) {
      const double accept = 10.0 * cfg_.feas_tol * std::max(1.0, p_.ineq_rhs.cwiseAbs().maxCoeff());
      if (rep.max_infeasibility > accept) rep.status = SolveStatus::NumericalTrouble;
      if (rep.dual.size() == m_) {
        rep.duality_gap = std::abs(rep.objective_value - p_.ineq_rhs.dot(rep.dual));
      }
    }
    return rep;
  }

  const LpProblem& p_;
  const SolverConfig& cfg_;
  Index n_;
  Index m_;
  std::vector<bool> is_free_;
  std::vector<bool> flipped_;
  Mat table_;
  Vec rhs_;
  std::vector<Index> basic_;
  std::vector<Index> nonbasic_;
  Vec cost1_;
  Vec cost2_;
  double z1_;
  double z2_;
  int iterations_ = 0;
  bool bland_ = false;
};

}  // namespace

double lp_infeasibility(const LpProblem& problem, const Vec& v) {
  double worst = 0.0;
  if (problem.num_constraints() > 0) {
    worst = std::max(worst, (problem.ineq_rhs - problem.ineq_lhs * v).maxCoeff());
  }
  for (Index j : problem.nonneg_vars) worst = std::max(worst, -v(j));
  return std::max(0.0, worst);
}

SolveReport solve_lp(const LpProblem& problem, const SolverConfig& cfg) {
  validate(problem);
  Dictionary dict(problem, cfg);
  return dict.run();
}

}  // namespace resunit
