#include <Eigen/QR>
#include <cmath>

#include "resunit/baselines.hpp"
#include "resunit/error.hpp"
#include "resunit/numerics.hpp"

namespace resunit {

namespace {

/// Rows of `xs` in [begin, end) whose coordinates are all strictly negative
/// (sign < 0) or all strictly positive (sign > 0).
std::vector<Index> orthant_rows(const Mat& xs, Index begin, Index end, int sign) {
  std::vector<Index> rows;
  for (Index i = begin; i < end; ++i) {
    const bool inside = sign < 0 ? (xs.row(i).array() < 0.0).all() : (xs.row(i).array() > 0.0).all();
    if (inside) rows.push_back(i);
  }
  return rows;
}

Mat gather(const Mat& m, const std::vector<Index>& rows) {
  Mat out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Index>(k)) = m.row(rows[k]);
  return out;
}

}  // namespace

VanillaLrResult vanilla_lr(const SampleSet& samples) {
  const Index n = samples.n();
  const Index d = samples.d();
  const Index half = n / 2;
  VanillaLrResult res;
  const std::vector<Index> neg = orthant_rows(samples.xs, 0, half, -1);
  const std::vector<Index> pos = orthant_rows(samples.xs, half, n, +1);
  res.n_neg_used = static_cast<Index>(neg.size());
  res.n_pos_used = static_cast<Index>(pos.size());
  if (res.n_neg_used < d || res.n_pos_used < d) return res;
  try {
    const Mat b_hat = lls_solve(gather(samples.xs, neg), gather(samples.ys, neg)).coeffs;
    const Mat d_hat = lls_solve(gather(samples.xs, pos), gather(samples.ys, pos)).coeffs;
    const Eigen::ColPivHouseholderQR<Mat> qr(b_hat);
    if (qr.rank() < d) return res;
    const Mat a_tilde = qr.solve(d_hat);
    if (!all_finite(a_tilde)) return res;
    res.b_hat = b_hat;
    res.a_hat = a_tilde - Mat::Identity(d, d);
    res.success = true;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::RankDeficient) throw;
  }
  return res;
}

double expected_sample_bound(Index d) {
  if (d < 1) throw Error(ErrorKind::InvalidArgument, "expected_sample_bound needs d >= 1");
  return static_cast<double>(d) * std::ldexp(1.0, static_cast<int>(d) + 1);
}

}  // namespace resunit
