// Analytic center of a polyhedron {v : G v >= r, v_nonneg >= 0}.
//
// A strictly feasible start comes from the Chebyshev LP
//
//   max rho  s.t.  G_i v - |G_i| rho >= r_i,  v_j - rho >= 0 (j nonneg),  rho <= 1,
//
// followed by damped Newton steps on -sum log(slack) with a backtracking
// line search that keeps every slack positive.

#include <Eigen/Dense>
#include <cmath>

#include "resunit/error.hpp"
#include "resunit/solver.hpp"

namespace resunit {

namespace {

struct Barrier {
  const LpProblem& p;
  Eigen::VectorXd mask;

  Eigen::VectorXd slacks(const Eigen::VectorXd& v) const {
    return p.ineq_lhs * v - p.ineq_rhs;
  }

  bool strictly_feasible(const Eigen::VectorXd& v) const {
    if ((slacks(v).array() <= 0.0).any()) return false;
    for (Index j : p.nonneg_vars) {
      if (v(j) <= 0.0) return false;
    }
    return true;
  }

  double value(const Eigen::VectorXd& v) const {
    double f = -slacks(v).array().log().sum();
    for (Index j : p.nonneg_vars) f -= std::log(v(j));
    return f;
  }
};

}  // namespace

CenterReport analytic_center(const LpProblem& problem, const SolverConfig& cfg) {
  validate(problem);
  const Index n = problem.num_vars();
  const Index m = problem.num_constraints();
  const Index n_nn = static_cast<Index>(problem.nonneg_vars.size());

  LpProblem cheb;
  cheb.objective = Vec::Zero(n + 1);
  cheb.objective(n) = -1.0;
  cheb.ineq_lhs = Mat::Zero(m + n_nn + 1, n + 1);
  cheb.ineq_rhs = Vec::Zero(m + n_nn + 1);
  cheb.ineq_lhs.topLeftCorner(m, n) = problem.ineq_lhs;
  for (Index i = 0; i < m; ++i) cheb.ineq_lhs(i, n) = -problem.ineq_lhs.row(i).norm();
  cheb.ineq_rhs.head(m) = problem.ineq_rhs;
  for (Index k = 0; k < n_nn; ++k) {
    cheb.ineq_lhs(m + k, problem.nonneg_vars[k]) = 1.0;
    cheb.ineq_lhs(m + k, n) = -1.0;
  }
  cheb.ineq_lhs(m + n_nn, n) = -1.0;
  cheb.ineq_rhs(m + n_nn) = -1.0;

  CenterReport rep;
  const SolveReport start = solve_lp(cheb, cfg);
  if (start.status == SolveStatus::Infeasible) {
    rep.status = SolveStatus::Infeasible;
    return rep;
  }
  if (start.status != SolveStatus::Optimal) {
    rep.status = start.status;
    return rep;
  }
  Eigen::VectorXd v = start.point.head(n);
  rep.chebyshev_radius = start.point(n);
  rep.max_infeasibility = lp_infeasibility(problem, v);
  rep.point = v;
  const double feas = cfg.feas_tol * std::max(1.0, problem.ineq_rhs.cwiseAbs().maxCoeff());
  if (rep.chebyshev_radius < -feas) {
    rep.status = SolveStatus::Infeasible;
    return rep;
  }
  if (rep.chebyshev_radius <= cfg.interior_tol) {
    rep.status = rep.max_infeasibility <= 10.0 * feas ? SolveStatus::Optimal : SolveStatus::NumericalTrouble;
    rep.has_interior = false;
    return rep;
  }
  rep.has_interior = true;

  Barrier bar{problem, Eigen::VectorXd::Zero(n)};
  for (Index j : problem.nonneg_vars) bar.mask(j) = 1.0;
  if (!bar.strictly_feasible(v)) {
    rep.status = SolveStatus::NumericalTrouble;
    return rep;
  }

  const Eigen::MatrixXd g_mat = problem.ineq_lhs;
  double f = bar.value(v);
  rep.status = SolveStatus::IterationLimit;
  for (int step = 0; step < cfg.max_newton_steps; ++step) {
    const Eigen::VectorXd s = bar.slacks(v);
    const Eigen::VectorXd inv_s = s.cwiseInverse();
    Eigen::VectorXd grad = -g_mat.transpose() * inv_s;
    const Eigen::MatrixXd weighted = inv_s.asDiagonal() * g_mat;
    Eigen::MatrixXd hess = weighted.transpose() * weighted;
    for (Index j : problem.nonneg_vars) {
      grad(j) -= 1.0 / v(j);
      hess(j, j) += 1.0 / (v(j) * v(j));
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 1e-14 * std::max(1.0, ldlt.vectorD().maxCoeff())) {
      // A flat direction in the barrier: the polyhedron is unbounded.
      rep.status = SolveStatus::NumericalTrouble;
      break;
    }
    const Eigen::VectorXd dir = ldlt.solve(-grad);
    const double decrement = -grad.dot(dir);
    if (!std::isfinite(decrement)) {
      rep.status = SolveStatus::NumericalTrouble;
      break;
    }
    if (0.5 * decrement < 1e-12) {
      rep.status = SolveStatus::Optimal;
      break;
    }
    double t = 1.0;
    Eigen::VectorXd trial = v + t * dir;
    while (!bar.strictly_feasible(trial) && t > 1e-12) {
      t *= 0.5;
      trial = v + t * dir;
    }
    double f_trial = bar.strictly_feasible(trial) ? bar.value(trial) : INFINITY;
    while (f_trial > f - 0.25 * t * decrement && t > 1e-12) {
      t *= 0.5;
      trial = v + t * dir;
      f_trial = bar.value(trial);
    }
    if (t <= 1e-12 || f_trial >= f) {
      // Rounding in the barrier value hides any further decrease.
      rep.status = 0.5 * decrement < 1e-6 ? SolveStatus::Optimal : SolveStatus::NumericalTrouble;
      break;
    }
    v = trial;
    f = f_trial;
    rep.newton_steps = step + 1;
  }
  rep.point = v;
  rep.max_infeasibility = lp_infeasibility(problem, v);
  return rep;
}

}  // namespace resunit
