#pragma once

#include "resunit/types.hpp"

namespace resunit {

/// Result of a linear least-squares fit of the unbiased model y = L x.
struct LlsFit {
  Mat coeffs;            ///< L, q x p.
  double residual_norm;  ///< Frobenius norm of inputs * coeffs^T - targets.
};

/// Fits L minimizing (1/2n) sum_i |L x_i - y_i|^2, where x_i / y_i are the rows
/// of `inputs` (n x p) and `targets` (n x q). Uses column-pivoted QR; the
/// design is rank deficient when a pivot falls below
/// max(n, p) * eps * |largest pivot|.
///
/// Throws Error{DimensionMismatch} when row counts differ and
/// Error{RankDeficient} when n < p or the design is rank deficient.
LlsFit lls_solve(const Mat& inputs, const Mat& targets);

/// Inverse of a square matrix. The condition number (2-norm) must stay below
/// `max_condition`; Error{IllConditioned} reports the estimate in value().
Mat invert(const Mat& m, double max_condition = 1e12);

/// 2-norm condition number; +inf for singular input.
double condition_number(const Mat& m);

/// Numerical rank via SVD with threshold max(rows, cols) * eps * sigma_max.
Index numerical_rank(const Mat& m);

/// True iff every eigenvalue of the symmetric matrix `m` is >= -tol.
/// Throws Error{NotSymmetric} when |m - m^T| exceeds tol anywhere.
bool is_psd(const Mat& m, double tol = 1e-8);

/// Coordinate-wise max(0, v).
inline Vec relu(const Vec& v) { return v.cwiseMax(0.0); }
inline Mat relu(const Mat& m) { return m.cwiseMax(0.0); }

/// |a - b|_F / |b|_F.
double relative_frobenius(const Mat& estimate, const Mat& truth);

bool all_finite(const Mat& m);

}  // namespace resunit
