#include <cmath>
#include <string>

#include "resunit/error.hpp"
#include "resunit/numerics.hpp"
#include "resunit/programs.hpp"
#include "resunit/solver.hpp"

namespace resunit {

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::Unbounded: return "Unbounded";
    case SolveStatus::IterationLimit: return "IterationLimit";
    case SolveStatus::NumericalTrouble: return "NumericalTrouble";
  }
  return "Unknown";
}

void validate(const QpProblem& problem) {
  const Index n = problem.num_vars();
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "QP has no variables");
  if (problem.hessian.rows() != n || problem.hessian.cols() != n) {
    throw Error(ErrorKind::DimensionMismatch, "QP hessian must be " + std::to_string(n) + "x" +
                                                  std::to_string(n));
  }
  if (!all_finite(problem.hessian) || !problem.linear.allFinite() || !std::isfinite(problem.constant)) {
    throw Error(ErrorKind::InvalidArgument, "QP data must be finite");
  }
  const double scale = std::max(1.0, problem.hessian.cwiseAbs().maxCoeff());
  if (!is_psd(problem.hessian, 1e-8 * scale)) {
    throw Error(ErrorKind::InvalidArgument, "QP hessian is not positive semidefinite");
  }
  for (Index i : problem.nonneg) {
    if (i < 0 || i >= n) throw Error(ErrorKind::InvalidArgument, "QP bound index out of range");
  }
}

void validate(const LpProblem& problem) {
  const Index n = problem.num_vars();
  const Index m = problem.num_constraints();
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "LP has no variables");
  if (m < 1) throw Error(ErrorKind::InvalidArgument, "LP needs at least one constraint");
  if (problem.ineq_lhs.rows() != m || problem.ineq_lhs.cols() != n) {
    throw Error(ErrorKind::DimensionMismatch, "LP constraint matrix must be " + std::to_string(m) +
                                                  "x" + std::to_string(n));
  }
  if (!all_finite(problem.ineq_lhs) || !problem.ineq_rhs.allFinite() || !problem.objective.allFinite()) {
    throw Error(ErrorKind::InvalidArgument, "LP data must be finite");
  }
  for (Index j : problem.nonneg_vars) {
    if (j < 0 || j >= n) throw Error(ErrorKind::InvalidArgument, "LP nonnegative index out of range");
  }
}

LpProblem build_slack_lp(const Mat& xs, const Mat& ys) {
  const Index n = xs.rows();
  const Index d = xs.cols();
  const Index m = ys.cols();
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "slack LP needs at least one sample");
  if (ys.rows() != n) {
    throw Error(ErrorKind::DimensionMismatch, "xs and ys must have the same number of samples");
  }
  const Index n_c = d * m;
  const Index n_vars = n_c + n * d;
  LpProblem lp;
  lp.objective = Vec::Zero(n_vars);
  lp.objective.tail(n * d).setConstant(1.0 / static_cast<double>(n));
  lp.ineq_lhs = Mat::Zero(n * d, n_vars);
  lp.ineq_rhs = Vec::Zero(n * d);
  // Row (i, j): sum_k C_jk y_ik + zeta_ij >= x_ij.
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) {
      const Index row = i * d + j;
      lp.ineq_lhs.block(row, j * m, 1, m) = ys.row(i);
      lp.ineq_lhs(row, n_c + row) = 1.0;
      lp.ineq_rhs(row) = xs(i, j);
    }
  }
  lp.nonneg_vars.reserve(n * d);
  for (Index k = n_c; k < n_vars; ++k) lp.nonneg_vars.push_back(k);
  lp.layout.push_back({"C", 0, n_c});
  for (Index i = 0; i < n; ++i) lp.layout.push_back({"zeta_" + std::to_string(i), n_c + i * d, d});
  return lp;
}

namespace {

void check_rows(const Mat& u, Index targets_rows) {
  if (u.rows() < 1) throw Error(ErrorKind::InvalidArgument, "row program needs at least one sample");
  if (targets_rows != u.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "regressors and targets must have the same number of samples");
  }
}

}  // namespace

QpProblem build_row_qp(const Mat& u, const Vec& t) {
  check_rows(u, t.size());
  const Index n = u.rows();
  const Index p = u.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  QpProblem qp;
  qp.hessian = Mat::Zero(p + n, p + n);
  qp.hessian.topLeftCorner(p, p) = inv_n * (u.transpose() * u);
  qp.hessian.topRightCorner(p, n) = -inv_n * u.transpose();
  qp.hessian.bottomLeftCorner(n, p) = -inv_n * u;
  qp.hessian.bottomRightCorner(n, n).diagonal().setConstant(inv_n);
  qp.linear = Vec::Zero(p + n);
  qp.linear.head(p) = -inv_n * (u.transpose() * t);
  qp.linear.tail(n) = inv_n * t;
  qp.constant = 0.5 * inv_n * t.squaredNorm();
  for (Index i = 0; i < n; ++i) qp.nonneg.push_back(p + i);
  qp.layout = {{"w", 0, p}, {"f", p, n}};
  return qp;
}

LpProblem build_row_lp(const Mat& u, const Vec& t) {
  check_rows(u, t.size());
  LpProblem lp;
  lp.objective = Vec::Zero(u.cols());
  lp.ineq_lhs = u;
  lp.ineq_rhs = t;
  lp.layout = {{"w", 0, u.cols()}};
  return lp;
}

LpProblem build_row_slack_lp(const Mat& u, const Vec& t) {
  check_rows(u, t.size());
  const Index n = u.rows();
  const Index p = u.cols();
  LpProblem lp;
  lp.objective = Vec::Zero(p + n);
  lp.objective.tail(n).setConstant(1.0 / static_cast<double>(n));
  lp.ineq_lhs = Mat::Zero(n, p + n);
  lp.ineq_lhs.leftCols(p) = u;
  lp.ineq_lhs.rightCols(n).diagonal().setOnes();
  lp.ineq_rhs = t;
  for (Index i = 0; i < n; ++i) lp.nonneg_vars.push_back(p + i);
  lp.layout = {{"w", 0, p}, {"z", p, n}};
  return lp;
}

QpProblem build_joint_qp(const Mat& u, const Mat& targets) {
  check_rows(u, targets.rows());
  const Index n = u.rows();
  const Index p = u.cols();
  const Index rows = targets.cols();
  const Index n_w = rows * p;
  const Index n_vars = n_w + n * rows;
  const double inv_n = 1.0 / static_cast<double>(n);
  QpProblem qp;
  qp.hessian = Mat::Zero(n_vars, n_vars);
  qp.linear = Vec::Zero(n_vars);
  const Mat gram = inv_n * (u.transpose() * u);
  for (Index j = 0; j < rows; ++j) {
    qp.hessian.block(j * p, j * p, p, p) = gram;
    qp.linear.segment(j * p, p) = -inv_n * (u.transpose() * targets.col(j));
    for (Index i = 0; i < n; ++i) {
      const Index f = n_w + i * rows + j;
      qp.hessian.block(j * p, f, p, 1) = -inv_n * u.row(i).transpose();
      qp.hessian.block(f, j * p, 1, p) = -inv_n * u.row(i);
      qp.hessian(f, f) = inv_n;
      qp.linear(f) = inv_n * targets(i, j);
    }
  }
  qp.constant = 0.5 * inv_n * targets.squaredNorm();
  for (Index k = n_w; k < n_vars; ++k) qp.nonneg.push_back(k);
  qp.layout.push_back({"W", 0, n_w});
  for (Index i = 0; i < n; ++i) qp.layout.push_back({"f_" + std::to_string(i), n_w + i * rows, rows});
  return qp;
}

LpProblem build_joint_lp(const Mat& u, const Mat& targets) {
  check_rows(u, targets.rows());
  const Index n = u.rows();
  const Index p = u.cols();
  const Index rows = targets.cols();
  LpProblem lp;
  lp.objective = Vec::Zero(rows * p);
  lp.ineq_lhs = Mat::Zero(n * rows, rows * p);
  lp.ineq_rhs = Vec::Zero(n * rows);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < rows; ++j) {
      lp.ineq_lhs.block(i * rows + j, j * p, 1, p) = u.row(i);
      lp.ineq_rhs(i * rows + j) = targets(i, j);
    }
  }
  lp.layout = {{"W", 0, rows * p}};
  return lp;
}

}  // namespace resunit
