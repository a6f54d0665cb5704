#pragma once

#include "resunit/solver.hpp"

namespace resunit {

/// Both layer programs split into independent rows of the same shape. With
/// regressors u_i (rows of `u`, n x p), targets t_i and a per-sample
/// nonnegative function estimate f_i, row programs read
///
///   QP:        min (1/2n) sum_i (f_i + t_i - w'u_i)^2   s.t. f >= 0
///   LP:        find w with  u_i'w >= t_i
///   slack LP:  min (1/n) sum_i z_i  s.t.  u_i'w + z_i >= t_i,  z >= 0
///
/// Variables are w (p, free) followed by f or z (n).
QpProblem build_row_qp(const Mat& u, const Vec& t);
LpProblem build_row_lp(const Mat& u, const Vec& t);
LpProblem build_row_slack_lp(const Mat& u, const Vec& t);

/// Joint program over all rows: row j contributes (u, targets.col(j)).
/// Variables: the weight matrix row-major (rows * p), then one block of
/// `rows` function-estimate (or slack) entries per sample.
QpProblem build_joint_qp(const Mat& u, const Mat& targets);
LpProblem build_joint_lp(const Mat& u, const Mat& targets);

}  // namespace resunit
