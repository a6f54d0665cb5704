#pragma once

#include <cstdint>

#include "resunit/rng.hpp"
#include "resunit/types.hpp"

namespace resunit {

/// Two-layer ReLU residual unit y = B[(A x)^+ + x].
/// `a` is d x d (entrywise nonnegative, full rank); `b` is m x d with full
/// column rank and m >= d.
struct ResidualUnit {
  Mat a;
  Mat b;

  Index d() const { return a.rows(); }
  Index m() const { return b.rows(); }
};

/// Checks shapes, nonnegativity of `a` and, when `check_rank`, full rank of
/// both layers. Throws Error{InvalidArgument} / Error{DimensionMismatch}.
void validate_unit(const ResidualUnit& unit, bool check_rank = true);

Vec forward(const ResidualUnit& unit, const Vec& x);

/// Row-wise forward map: `xs` is n x d, result is n x m.
Mat forward_batch(const ResidualUnit& unit, const Mat& xs);

/// Row j of `a` is a scale transformation iff every off-diagonal entry of
/// that row is exactly zero.
bool is_scale_transformation_row(const Mat& a, Index j);
bool has_scale_transformation(const Mat& a);

/// Square `b` and no scale-transformation row in `a`: the layer-2 objective
/// then has a unique minimizer.
bool satisfies_unique_layer2(const ResidualUnit& unit);

struct InputDistribution {
  enum class Kind { GaussianIid, FoldedGaussianIid, GaussUniformMixture };

  Kind kind = Kind::GaussUniformMixture;
  Index dim = 1;
  double mean = -0.1;  ///< Gaussian (component) mean.
  double std = 1.0;    ///< Gaussian (component) standard deviation.
  double u_lo = -0.9;  ///< Uniform component bounds (mixture only).
  double u_hi = 1.1;

  /// Per-coordinate equal mixture of N(-0.1, 1) and U(-0.9, 1.1); zero mean.
  static InputDistribution mixture(Index d);
  static InputDistribution gaussian(Index d, double mean, double std);
};

/// n x d matrix of i.i.d. draws. Mixture coordinates draw the component
/// selector (uniform() < 0.5 picks the Gaussian) before the value.
Mat draw_inputs(const InputDistribution& dist, Index n, Philox& rng);

/// n paired samples, one per row of `xs` (n x d) and `ys` (n x m).
struct SampleSet {
  Mat xs;
  Mat ys;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  Index n() const { return xs.rows(); }
  Index d() const { return xs.cols(); }
  Index m() const { return ys.cols(); }
};

/// Draws n inputs from `dist` (stream 0 of `seed`) and labels them with the
/// unit plus i.i.d. N(0, noise_sigma^2) noise per output coordinate (stream 1,
/// so the inputs do not depend on noise_sigma).
SampleSet sample(const ResidualUnit& unit, const InputDistribution& dist,
                 Index n, double noise_sigma, std::uint64_t seed);

struct NetworkGenSpec {
  Index d = 1;
  Index m = 1;
  double layer1_mean = 0.0;  ///< folded Gaussian |N(mean, std^2)|
  double layer1_std = 1.0;
  double layer2_mean = 0.0;  ///< Gaussian N(mean, std^2)
  double layer2_std = 1.0;
  std::uint64_t seed = 0;
  bool require_non_scale_transform = false;
  int max_retries = 100;
  double rank_tol = 1e-8;  ///< reject when sigma_min < rank_tol * sigma_max
};

/// Draws a teacher, resampling until both layers are full rank (and, when
/// requested, `a` has no scale-transformation row).
/// Throws Error{GenerationFailed} once the retry budget is exhausted.
ResidualUnit generate_unit(const NetworkGenSpec& spec);

}  // namespace resunit
