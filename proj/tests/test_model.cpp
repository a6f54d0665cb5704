#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "resunit/error.hpp"
#include "resunit/model.hpp"
#include "resunit/numerics.hpp"

using namespace resunit;

namespace {

ResidualUnit scalar_unit(double a, double b) {
  ResidualUnit u{Mat::Constant(1, 1, a), Mat::Constant(1, 1, b)};
  return u;
}

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("forward on hand-evaluated inputs") {
    const ResidualUnit one = scalar_unit(1, 1);
    CHECK(forward(one, vec({1}))(0) == 2.0);
    CHECK(forward(one, vec({-1}))(0) == -1.0);
    ResidualUnit two{Mat::Ones(2, 2), Mat::Identity(2, 2)};
    const Vec y = forward(two, vec({1, -2}));
    CHECK(y(0) == 1.0);
    CHECK(y(1) == -2.0);
  }

  TEST_CASE("forward_batch matches forward row by row") {
    const ResidualUnit unit = test::random_unit(3, 5, 1);
    const Mat xs = test::gaussian_matrix(20, 3, 2);
    const Mat ys = forward_batch(unit, xs);
    for (Index i = 0; i < 20; ++i) CHECK((ys.row(i).transpose() - forward(unit, xs.row(i).transpose())).norm() == 0.0);
  }

  TEST_CASE("piecewise linearity on the negative and positive orthants") {
    const ResidualUnit unit = test::random_unit(4, 4, 3);
    const Mat xs = test::gaussian_matrix(30, 4, 4).cwiseAbs();
    for (Index i = 0; i < 30; ++i) {
      const Vec x = xs.row(i).transpose();
      CHECK((forward(unit, Vec(-x)) - unit.b * Vec(-x)).norm() < 1e-14);
      const Vec lin = unit.b * (unit.a + Mat::Identity(4, 4)) * x;
      CHECK((forward(unit, x) - lin).norm() < 1e-12 * (1.0 + lin.norm()));
    }
  }

  TEST_CASE("validate_unit rejects bad shapes, negative entries and rank loss") {
    CHECK_NOTHROW(validate_unit(test::random_unit(3, 4, 5)));
    ResidualUnit neg{Mat::Identity(2, 2), Mat::Identity(2, 2)};
    neg.a(0, 1) = -0.5;
    CHECK_THROWS_AS(validate_unit(neg), Error);
    ResidualUnit shape{Mat::Identity(2, 2), Mat::Identity(3, 3)};
    try {
      validate_unit(shape);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::DimensionMismatch);
    }
    ResidualUnit rank{Mat::Ones(2, 2), Mat::Identity(2, 2)};
    CHECK_THROWS_AS(validate_unit(rank), Error);
    CHECK_NOTHROW(validate_unit(rank, false));
  }

  TEST_CASE("scale-transformation detector follows the row definition") {
    Mat a(3, 3);
    a << 2, 0, 0,
         1, 1, 0,
         0, 0, 3;
    CHECK(is_scale_transformation_row(a, 0));
    CHECK_FALSE(is_scale_transformation_row(a, 1));
    CHECK(is_scale_transformation_row(a, 2));
    CHECK(has_scale_transformation(a));
    CHECK_FALSE(has_scale_transformation(Mat::Ones(3, 3)));
    ResidualUnit u{Mat::Ones(2, 2) + Mat::Identity(2, 2), Mat::Identity(2, 2)};
    CHECK(satisfies_unique_layer2(u));
    u.b = Mat::Ones(3, 2);
    CHECK_FALSE(satisfies_unique_layer2(u));
  }

  TEST_CASE("noiseless samples equal the forward map exactly") {
    const ResidualUnit unit = test::random_unit(3, 3, 6);
    const SampleSet s = test::mixture_samples(unit, 100, 7);
    CHECK(s.n() == 100);
    CHECK(s.ys == forward_batch(unit, s.xs));
  }

  TEST_CASE("sampling is deterministic in the seed") {
    const ResidualUnit unit = test::random_unit(3, 3, 8);
    const SampleSet a = test::mixture_samples(unit, 50, 9, 0.1);
    const SampleSet b = test::mixture_samples(unit, 50, 9, 0.1);
    const SampleSet c = test::mixture_samples(unit, 50, 10, 0.1);
    CHECK(a.xs == b.xs);
    CHECK(a.ys == b.ys);
    CHECK(a.xs != c.xs);
  }

  TEST_CASE("noise draws do not move the inputs") {
    const ResidualUnit unit = test::random_unit(3, 3, 11);
    const SampleSet clean = test::mixture_samples(unit, 50, 12);
    const SampleSet noisy = test::mixture_samples(unit, 50, 12, 0.2);
    CHECK(clean.xs == noisy.xs);
    CHECK(clean.ys != noisy.ys);
  }

  TEST_CASE("noise mean stays within the CLT bound") {
    const ResidualUnit unit = test::random_unit(2, 3, 13);
    const SampleSet s = test::mixture_samples(unit, 10000, 14, 0.1);
    const Mat resid = s.ys - forward_batch(unit, s.xs);
    for (Index k = 0; k < resid.cols(); ++k) {
      CHECK(std::abs(resid.col(k).mean()) <= 3.0 * 0.1 / 100.0);
    }
  }

  TEST_CASE("mixture inputs have the expected moments and tail mass") {
    Philox rng(15);
    const Mat xs = draw_inputs(InputDistribution::mixture(1), 100000, rng);
    const double mean = xs.mean();
    const double var = (xs.array() - mean).square().mean();
    // mean 0.5 * (-0.1) + 0.5 * 0.1 = 0; variance 0.5 * 1.01 + 0.5 * (4/12 + 0.01).
    CHECK(std::abs(mean) < 0.01);
    CHECK(var == doctest::Approx(0.6766667).epsilon(0.01));
    // Only the Gaussian component leaves [-0.9, 1.1]: 0.5 * (Phi(-0.8) + 1 - Phi(1.2)).
    const double outside = static_cast<double>(((xs.array() < -0.9) || (xs.array() > 1.1)).count()) / 100000.0;
    CHECK(outside == doctest::Approx(0.16350).epsilon(0.03));
  }

  TEST_CASE("generate_unit is deterministic, nonnegative and full rank") {
    NetworkGenSpec spec;
    spec.d = 2;
    spec.m = 2;
    spec.seed = 7;
    const ResidualUnit a = generate_unit(spec);
    const ResidualUnit b = generate_unit(spec);
    CHECK(a.a == b.a);
    CHECK(a.b == b.b);
    CHECK(a.a.minCoeff() >= 0.0);
    const ResidualUnit four = test::random_unit(4, 4, 16);
    CHECK(numerical_rank(four.a) == 4);
    CHECK(numerical_rank(four.b) == 4);
    CHECK_FALSE(has_scale_transformation(four.a));
  }

  TEST_CASE("generate_unit errors") {
    NetworkGenSpec bad;
    bad.d = 3;
    bad.m = 2;
    CHECK_THROWS_AS(generate_unit(bad), Error);
    NetworkGenSpec stuck;
    stuck.d = 2;
    stuck.m = 2;
    stuck.layer1_std = 0.0;
    stuck.layer1_mean = 0.0;
    try {
      generate_unit(stuck);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::GenerationFailed);
    }
  }

  TEST_CASE("sample rejects mismatched distributions") {
    const ResidualUnit unit = test::random_unit(2, 2, 17);
    CHECK_THROWS_AS(sample(unit, InputDistribution::mixture(3), 10, 0.0, 1), Error);
    CHECK_THROWS_AS(sample(unit, InputDistribution::mixture(2), 10, -1.0, 1), Error);
  }
}
