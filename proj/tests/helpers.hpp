#pragma once

#include "resunit/model.hpp"
#include "resunit/numerics.hpp"
#include "resunit/solver.hpp"
#include "resunit/rng.hpp"
#include "resunit/types.hpp"

namespace resunit::test {

/// n x p matrix of standard normal draws.
inline Mat gaussian_matrix(Index rows, Index cols, std::uint64_t seed) {
  Philox rng(seed);
  Mat m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  }
  return m;
}

inline ResidualUnit random_unit(Index d, Index m, std::uint64_t seed, bool non_scale = true) {
  NetworkGenSpec spec;
  spec.d = d;
  spec.m = m;
  spec.seed = seed;
  spec.require_non_scale_transform = non_scale && d > 1;
  return generate_unit(spec);
}

inline SampleSet mixture_samples(const ResidualUnit& unit, Index n, std::uint64_t seed, double sigma = 0.0) {
  return sample(unit, InputDistribution::mixture(unit.d()), n, sigma, seed);
}

/// A system made contradictory by appending the negated nonnegative
/// combination y'G v >= y'r shifted by a positive gap.
inline LpProblem contradictory_lp(std::uint64_t seed) {
  Philox rng(seed);
  const Index p = 1 + static_cast<Index>(rng.below(5));
  const Index k = 1 + static_cast<Index>(rng.below(6));
  LpProblem lp;
  lp.objective = Vec::Zero(p);
  lp.ineq_lhs = gaussian_matrix(k + 1, p, seed + 1000);
  lp.ineq_rhs = gaussian_matrix(k + 1, 1, seed + 2000).col(0);
  Vec y(k);
  for (Index i = 0; i < k; ++i) y(i) = rng.uniform(0.1, 1.0);
  lp.ineq_lhs.row(k) = -(y.transpose() * lp.ineq_lhs.topRows(k));
  lp.ineq_rhs(k) = -y.dot(lp.ineq_rhs.head(k)) + rng.uniform(0.1, 1.0);
  if (rng.uniform() < 0.5) {
    for (Index j = 0; j < p; j += 2) lp.nonneg_vars.push_back(j);
  }
  return lp;
}

inline QpProblem random_qp(std::uint64_t seed) {
  Philox rng(seed);
  const Index n = 2 + static_cast<Index>(rng.below(8));
  const Index rank = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
  const Mat t = gaussian_matrix(rank, n, seed + 1);
  QpProblem qp;
  qp.hessian = t.transpose() * t;
  qp.linear = gaussian_matrix(n, 1, seed + 2).col(0);
  // Keep the problem bounded below: free directions in the null space of H
  // must not decrease the objective.
  const Mat proj = qp.hessian * invert(qp.hessian + Mat::Identity(n, n), 1e16);
  qp.linear = proj * qp.linear;
  for (Index i = 0; i < n; ++i) qp.nonneg.push_back(i);
  return qp;
}

}  // namespace resunit::test
