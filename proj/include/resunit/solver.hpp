#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "resunit/types.hpp"

namespace resunit {

/// Named contiguous range of variables inside a flattened program.
struct VarBlock {
  std::string name;
  Index offset = 0;
  Index size = 0;
};

/// min 1/2 v'Hv + q'v + constant  s.t.  v_i >= 0 for i in `nonneg`.
struct QpProblem {
  Mat hessian;  ///< N x N, symmetric PSD
  Vec linear;   ///< N
  double constant = 0.0;
  std::vector<Index> nonneg;
  std::vector<VarBlock> layout;

  Index num_vars() const { return linear.size(); }
};

/// min c'v  s.t.  G v >= r,  v_i >= 0 for i in `nonneg_vars`, other v free.
struct LpProblem {
  Vec objective;  ///< N; all-zero for a feasibility problem
  Mat ineq_lhs;   ///< M x N
  Vec ineq_rhs;   ///< M
  std::vector<Index> nonneg_vars;
  std::vector<VarBlock> layout;

  Index num_vars() const { return objective.size(); }
  Index num_constraints() const { return ineq_rhs.size(); }
};

struct SolverConfig {
  double feas_tol = 1e-8;
  double gap_tol = 1e-8;
  double stat_tol = 1e-6;
  int max_iterations = 20000;

  // ADMM
  double rho = 0.1;
  double sigma = 1e-6;
  double alpha = 1.6;
  bool polish = true;
  int check_interval = 25;

  // Simplex
  double pivot_tol = 1e-9;
  int degenerate_pivots_before_bland = 50;

  // Analytic center
  double interior_tol = 1e-9;  ///< minimum Chebyshev radius counted as interior
  int max_newton_steps = 200;
};

enum class SolveStatus {
  Optimal,
  Infeasible,
  Unbounded,
  IterationLimit,
  NumericalTrouble,
};

std::string_view to_string(SolveStatus status);

struct SolveReport {
  Vec point;
  double objective_value = 0.0;
  double max_infeasibility = 0.0;
  int iterations = 0;
  SolveStatus status = SolveStatus::NumericalTrouble;

  /// QP: bound multipliers (gradient entries on bounded variables, zero on
  /// free ones). LP: constraint multipliers y >= 0 with G'y = c on free and
  /// G'y <= c on nonnegative variables.
  Vec dual;
  double stationarity = 0.0;  ///< QP KKT residual
  double duality_gap = 0.0;
  bool polished = false;      ///< QP: active-set polish accepted

  /// LP Infeasible: y >= 0 with G'y = 0 (free vars), G'y <= 0 (nonneg vars)
  /// and r'y > 0. Normalized to unit 1-norm. Empty otherwise.
  Vec farkas_ray;
};

/// Operator-splitting (ADMM) QP solver with over-relaxation, diagonal
/// equilibration, adaptive step size and an active-set polish.
SolveReport solve_qp(const QpProblem& problem, const SolverConfig& cfg = {});

/// Two-phase dense simplex on a compact tableau. A zero objective runs
/// phase 1 only and returns its terminal vertex.
SolveReport solve_lp(const LpProblem& problem, const SolverConfig& cfg = {});

struct CenterReport {
  Vec point;
  SolveStatus status = SolveStatus::NumericalTrouble;
  double chebyshev_radius = 0.0;  ///< largest inscribed ball radius found
  double max_infeasibility = 0.0;
  int newton_steps = 0;
  bool has_interior = false;
};

/// Analytic center of {v : G v >= r, v_nonneg >= 0}: the maximizer of
/// sum log(G v - r) + sum log v_nonneg. The objective of `problem` is ignored.
/// A strictly feasible start comes from a Chebyshev-ball LP. When the set is
/// nonempty but has no interior, the Chebyshev point is returned with
/// status Optimal and has_interior == false; empty sets give Infeasible and
/// unbounded sets NumericalTrouble.
CenterReport analytic_center(const LpProblem& problem, const SolverConfig& cfg = {});

/// max(0, r - G v) and max(0, -v_nonneg), whichever is larger.
double lp_infeasibility(const LpProblem& problem, const Vec& v);

/// Objective of `problem` at v, including the constant term.
double qp_objective(const QpProblem& problem, const Vec& v);

/// Slack LP for noisy layer-2 learning:
///   min (1/n) sum_i 1'zeta_i  s.t.  C y_i - x_i >= -zeta_i,  zeta_i >= 0.
/// Variables: C flattened row-major (d*m) then zeta_1..zeta_n (d each).
/// `xs` is n x d and `ys` is n x m.
LpProblem build_slack_lp(const Mat& xs, const Mat& ys);

void validate(const QpProblem& problem);
void validate(const LpProblem& problem);

}  // namespace resunit
