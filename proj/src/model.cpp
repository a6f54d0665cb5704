#include "resunit/model.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <string>

#include "resunit/error.hpp"
#include "resunit/numerics.hpp"

namespace resunit {

namespace {

bool well_ranked(const Mat& m, double tol) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  return s(s.size() - 1) >= tol * s(0) && s(0) > 0.0;
}

}  // namespace

void validate_unit(const ResidualUnit& unit, bool check_rank) {
  const Index d = unit.a.rows();
  if (d == 0 || unit.a.cols() != d) {
    throw Error(ErrorKind::DimensionMismatch, "residual unit: a must be d x d");
  }
  if (unit.b.cols() != d) {
    throw Error(ErrorKind::DimensionMismatch, "residual unit: b must be m x d");
  }
  if (unit.b.rows() < d) {
    throw Error(ErrorKind::InvalidArgument, "residual unit: requires m >= d");
  }
  if (!unit.a.allFinite() || !unit.b.allFinite()) {
    throw Error(ErrorKind::InvalidArgument, "residual unit: non-finite weight");
  }
  if (unit.a.minCoeff() < 0.0) {
    throw Error(ErrorKind::InvalidArgument,
                "residual unit: layer-1 weights must be nonnegative");
  }
  if (check_rank) {
    if (numerical_rank(unit.a) < d) {
      throw Error(ErrorKind::InvalidArgument, "residual unit: a is rank deficient");
    }
    if (numerical_rank(unit.b) < d) {
      throw Error(ErrorKind::InvalidArgument, "residual unit: b is rank deficient");
    }
  }
}

Vec forward(const ResidualUnit& unit, const Vec& x) {
  if (x.size() != unit.d() || unit.b.cols() != unit.d()) {
    throw Error(ErrorKind::DimensionMismatch,
                "forward: input has " + std::to_string(x.size()) +
                    " entries, unit expects " + std::to_string(unit.d()));
  }
  const Vec hidden = relu(Vec(unit.a * x)) + x;
  return unit.b * hidden;
}

Mat forward_batch(const ResidualUnit& unit, const Mat& xs) {
  if (xs.cols() != unit.d()) {
    throw Error(ErrorKind::DimensionMismatch, "forward_batch: input width differs from d");
  }
  const Mat hidden = relu(Mat(xs * unit.a.transpose())) + xs;
  return hidden * unit.b.transpose();
}

bool is_scale_transformation_row(const Mat& a, Index j) {
  for (Index k = 0; k < a.cols(); ++k) {
    if (k != j && a(j, k) != 0.0) return false;
  }
  return true;
}

bool has_scale_transformation(const Mat& a) {
  for (Index j = 0; j < a.rows(); ++j) {
    if (is_scale_transformation_row(a, j)) return true;
  }
  return false;
}

bool satisfies_unique_layer2(const ResidualUnit& unit) {
  return unit.m() == unit.d() && !has_scale_transformation(unit.a);
}

InputDistribution InputDistribution::mixture(Index d) {
  InputDistribution dist;
  dist.kind = Kind::GaussUniformMixture;
  dist.dim = d;
  return dist;
}

InputDistribution InputDistribution::gaussian(Index d, double mean, double std) {
  InputDistribution dist;
  dist.kind = Kind::GaussianIid;
  dist.dim = d;
  dist.mean = mean;
  dist.std = std;
  return dist;
}

Mat draw_inputs(const InputDistribution& dist, Index n, Philox& rng) {
  if (dist.dim < 1 || n < 0) {
    throw Error(ErrorKind::InvalidArgument, "draw_inputs: bad dimensions");
  }
  Mat xs(n, dist.dim);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < dist.dim; ++j) {
      switch (dist.kind) {
        case InputDistribution::Kind::GaussianIid:
          xs(i, j) = rng.normal(dist.mean, dist.std);
          break;
        case InputDistribution::Kind::FoldedGaussianIid:
          xs(i, j) = std::abs(rng.normal(dist.mean, dist.std));
          break;
        case InputDistribution::Kind::GaussUniformMixture:
          xs(i, j) = rng.uniform() < 0.5 ? rng.normal(dist.mean, dist.std)
                                         : rng.uniform(dist.u_lo, dist.u_hi);
          break;
      }
    }
  }
  return xs;
}

SampleSet sample(const ResidualUnit& unit, const InputDistribution& dist,
                 Index n, double noise_sigma, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "sample: n must be >= 1");
  if (!(noise_sigma >= 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "sample: noise_sigma must be >= 0");
  }
  if (dist.dim != unit.d()) {
    throw Error(ErrorKind::DimensionMismatch, "sample: distribution dim != unit d");
  }
  SampleSet s;
  s.noise_sigma = noise_sigma;
  s.seed = seed;
  Philox input_rng(seed, 0);
  s.xs = draw_inputs(dist, n, input_rng);
  s.ys = forward_batch(unit, s.xs);
  if (noise_sigma > 0.0) {
    Philox noise_rng(seed, 1);
    for (Index i = 0; i < s.ys.rows(); ++i) {
      for (Index k = 0; k < s.ys.cols(); ++k) {
        s.ys(i, k) += noise_rng.normal(0.0, noise_sigma);
      }
    }
  }
  return s;
}

ResidualUnit generate_unit(const NetworkGenSpec& spec) {
  if (spec.d < 1 || spec.m < spec.d) {
    throw Error(ErrorKind::InvalidArgument, "generate_unit: need d >= 1 and m >= d");
  }
  Philox rng(spec.seed, 2);
  for (int attempt = 0; attempt < spec.max_retries; ++attempt) {
    ResidualUnit unit{Mat(spec.d, spec.d), Mat(spec.m, spec.d)};
    for (Index i = 0; i < spec.d; ++i) {
      for (Index j = 0; j < spec.d; ++j) {
        unit.a(i, j) = std::abs(rng.normal(spec.layer1_mean, spec.layer1_std));
      }
    }
    for (Index i = 0; i < spec.m; ++i) {
      for (Index j = 0; j < spec.d; ++j) {
        unit.b(i, j) = rng.normal(spec.layer2_mean, spec.layer2_std);
      }
    }
    if (!well_ranked(unit.a, spec.rank_tol) || !well_ranked(unit.b, spec.rank_tol)) {
      continue;
    }
    if (spec.require_non_scale_transform && has_scale_transformation(unit.a)) {
      continue;
    }
    return unit;
  }
  throw Error(ErrorKind::GenerationFailed,
              "generate_unit: no admissible teacher after " +
                  std::to_string(spec.max_retries) + " draws");
}

}  // namespace resunit
