#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "resunit/error.hpp"
#include "resunit/layer2.hpp"
#include "resunit/numerics.hpp"

using namespace resunit;

namespace {

Layer2Config literal() {
  Layer2Config cfg;
  cfg.orthant_tiebreak = false;
  return cfg;
}

SampleSet scalar_samples(double a, double b, Index n, std::uint64_t seed) {
  const ResidualUnit unit{Mat::Constant(1, 1, a), Mat::Constant(1, 1, b)};
  return test::mixture_samples(unit, n, seed);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

TEST_SUITE("layer2") {
  TEST_CASE("d=1 estimate lies in the scale-equivalence interval") {
    const SampleSet s = scalar_samples(1.0, 2.0, 20, 1);
    for (const Layer2Config& cfg : {Layer2Config{}, literal()}) {
      for (Layer2Method m : {Layer2Method::LP, Layer2Method::QP, Layer2Method::SlackLP}) {
        const Layer2Estimate est = learn_layer2(s, m, cfg);
        CHECK(est.c_hat(0, 0) >= 0.25 - 1e-8);
        CHECK(est.c_hat(0, 0) <= 0.5 + 1e-8);
        CHECK(std::abs(est.b_hat(0, 0) - 2.0) <= 1e-6);
      }
    }
  }

  TEST_CASE("d=2 non-scale teacher is recovered") {
    const ResidualUnit unit{Mat::Ones(2, 2), Mat::Identity(2, 2)};
    const SampleSet s = test::mixture_samples(unit, 200, 2);
    for (Layer2Method m : {Layer2Method::LP, Layer2Method::QP, Layer2Method::SlackLP}) {
      const Layer2Estimate est = learn_layer2(s, m);
      CHECK(relative_frobenius(est.b_hat, unit.b) <= 1e-3);
    }
  }

  TEST_CASE("estimates satisfy the feasibility and nonnegativity invariants") {
    const ResidualUnit unit = test::random_unit(3, 3, 3);
    const SampleSet s = test::mixture_samples(unit, 120, 4);
    const double scale = std::max(1.0, s.xs.cwiseAbs().maxCoeff());
    const double tol = 1e-8 * scale;
    for (const Layer2Config& cfg : {Layer2Config{}, literal()}) {
      for (Layer2Method m : {Layer2Method::LP, Layer2Method::QP, Layer2Method::SlackLP}) {
        const Layer2Estimate est = learn_layer2(s, m, cfg);
        // The QP objective is quadratic in the violation, so its feasibility is only square-root accurate.
        const double feas_tol = m == Layer2Method::QP ? 1e-5 * scale : tol;
        CHECK((s.ys * est.c_hat.transpose() - s.xs).minCoeff() >= -feas_tol);
        CHECK(est.xi_hat.minCoeff() >= -tol);
        CHECK(est.row_status.size() == 3);
        CHECK(std::all_of(est.row_status.begin(), est.row_status.end(),
                          [](SolveStatus st) { return st == SolveStatus::Optimal; }));
        const Mat expect = s.ys * est.c_hat.transpose() * est.k_hat.cwiseInverse().asDiagonal() - s.xs;
        CHECK((est.hidden - expect).cwiseAbs().maxCoeff() <= 1e-12);
      }
    }
  }

  TEST_CASE("unique path inverts C") {
    const ResidualUnit unit = test::random_unit(3, 3, 5);
    const SampleSet s = test::mixture_samples(unit, 150, 6);
    Layer2Config cfg;
    cfg.path = Layer2Path::Unique;
    const Layer2Estimate est = learn_layer2(s, Layer2Method::LP, cfg);
    CHECK(est.used_path == Layer2Path::Unique);
    CHECK((est.b_hat - invert(est.c_hat)).norm() <= 1e-12);
    CHECK(est.k_hat == Vec::Ones(3));
  }

  TEST_CASE("unique path falls back for rectangular B") {
    const ResidualUnit unit = test::random_unit(2, 3, 7);
    const SampleSet s = test::mixture_samples(unit, 100, 8);
    Layer2Config cfg;
    cfg.path = Layer2Path::Unique;
    const Layer2Estimate est = learn_layer2(s, Layer2Method::LP, cfg);
    CHECK(est.used_path == Layer2Path::GeneralRescaled);
    CHECK_FALSE(est.warnings.empty());
  }

  TEST_CASE("held-out samples stay feasible") {
    const ResidualUnit unit = test::random_unit(3, 3, 9);
    const SampleSet train = test::mixture_samples(unit, 50, 10);
    const SampleSet fresh = test::mixture_samples(unit, 1000, 11);
    const Layer2Estimate est = learn_layer2(train, Layer2Method::LP);
    const Mat slack = fresh.ys * est.c_hat.transpose() - fresh.xs;
    Index ok = 0;
    for (Index i = 0; i < slack.rows(); ++i) ok += slack.row(i).minCoeff() >= -1e-4;
    CHECK(ok >= 990);
  }

  TEST_CASE("QP and LP agree when the minimizer is unique") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const ResidualUnit unit = test::random_unit(3, 3, 20 + seed);
      const SampleSet s = test::mixture_samples(unit, 150, 30 + seed);
      const Layer2Estimate lp = learn_layer2(s, Layer2Method::LP);
      const Layer2Estimate qp = learn_layer2(s, Layer2Method::QP);
      CHECK(relative_frobenius(qp.b_hat, lp.b_hat) <= 1e-5);
    }
  }

  TEST_CASE("C B is nearly diagonal at d=4, n=500") {
    const ResidualUnit unit = test::random_unit(4, 4, 12);
    const SampleSet s = test::mixture_samples(unit, 500, 13);
    for (const Layer2Config& cfg : {Layer2Config{}, literal()}) {
      const Layer2Estimate est = learn_layer2(s, Layer2Method::LP, cfg);
      Mat cb = est.c_hat * unit.b;
      cb.diagonal().setZero();
      CHECK(cb.cwiseAbs().maxCoeff() <= 1e-3);
    }
  }

  TEST_CASE("layer-2 error does not grow with n") {
    const ResidualUnit unit = test::random_unit(4, 4, 14);
    std::vector<double> medians;
    for (Index n : {64, 128, 256, 512}) {
      std::vector<double> errs;
      for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const SampleSet s = test::mixture_samples(unit, n, 1000 + seed);
        errs.push_back(relative_frobenius(learn_layer2(s, Layer2Method::LP, literal()).b_hat, unit.b));
      }
      medians.push_back(median(errs));
    }
    int violations = 0;
    for (std::size_t i = 1; i < medians.size(); ++i) {
      if (medians[i] > medians[i - 1] + 1e-12) {
        ++violations;
        CHECK(medians[i] <= 1.2 * medians[i - 1] + 1e-12);
      }
    }
    CHECK(violations <= 1);
  }

  TEST_CASE("n < d is reported") {
    const ResidualUnit unit = test::random_unit(3, 3, 15);
    const SampleSet s = test::mixture_samples(unit, 2, 16);
    try {
      const Layer2Estimate est = learn_layer2(s, Layer2Method::LP);
      CHECK_FALSE(est.warnings.empty());
      CHECK(est.warnings.front().find("underdetermined") != std::string::npos);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::SingularCHat);
    }
  }

  TEST_CASE("rescale with the true C keeps unit scale factors") {
    const ResidualUnit unit = test::random_unit(3, 3, 17);
    const SampleSet s = test::mixture_samples(unit, 300, 18);
    const RescaleResult rs = rescale_layer2(s.xs, s.ys, invert(unit.b));
    CHECK(rs.k == Vec::Ones(3));
    for (const RowScale& r : rs.rows) CHECK(r.gated);
  }

  TEST_CASE("rescale on a scaled d=1 row") {
    const SampleSet s = scalar_samples(3.0, 1.0, 100, 19);
    const Mat c = Mat::Constant(1, 1, 0.5);
    const RescaleResult rs = rescale_layer2(s.xs, s.ys, c);
    CHECK(rs.k(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(rs.rows[0].lr_objective <= 1e-20);
    const Mat b = recover_b_general(s.ys, c, rs.k);
    CHECK(std::abs(b(0, 0) - 1.0) <= 1e-6);
  }

  TEST_CASE("rescale gate fires on a nonconstant ratio") {
    const ResidualUnit unit = test::random_unit(2, 2, 20);
    const SampleSet s = test::mixture_samples(unit, 200, 21);
    Mat c = invert(unit.b);
    c.row(0) += 0.3 * c.row(1);
    const RescaleResult rs = rescale_layer2(s.xs, s.ys, c);
    CHECK(rs.rows[0].gated);
    CHECK(rs.k(0) == 1.0);
  }

  TEST_CASE("rescale flags rows with too few negative samples") {
    const SampleSet s = scalar_samples(1.0, 1.0, 8, 22);
    const RescaleResult rs = rescale_layer2(s.xs, s.ys, Mat::Ones(1, 1));
    CHECK(rs.rows[0].degenerate);
    CHECK(rs.k(0) == 1.0);
    CHECK_THROWS_AS(rescale_layer2(s.xs, s.ys, Mat::Ones(2, 1)), Error);
  }

  TEST_CASE("recover_b_general") {
    const ResidualUnit unit = test::random_unit(3, 3, 23);
    const SampleSet s = test::mixture_samples(unit, 100, 24);
    CHECK((recover_b_general(s.ys, invert(unit.b), Vec::Ones(3)) - unit.b).norm() <= 1e-8);
    CHECK_THROWS_AS(recover_b_general(s.ys, invert(unit.b), Vec::Zero(3)), Error);

    const ResidualUnit rect = test::random_unit(2, 3, 25);
    const SampleSet r = test::mixture_samples(rect, 300, 26);
    const Layer2Estimate est = learn_layer2(r, Layer2Method::LP);
    CHECK(relative_frobenius(est.b_hat, rect.b) <= 1e-3);
  }

  TEST_CASE("orthant tie-break row") {
    const ResidualUnit unit = test::random_unit(2, 2, 27);
    const Mat c_star = invert(unit.b);
    const SampleSet s = test::mixture_samples(unit, 200, 28);
    for (Index j = 0; j < 2; ++j) {
      const auto row = orthant_row(s.xs, s.ys, j, 1e-8);
      REQUIRE(row.has_value());
      CHECK((*row - c_star.row(j).transpose()).norm() <= 1e-10);
    }
    // Too few all-negative samples.
    CHECK_FALSE(orthant_row(s.xs.topRows(1), s.ys.topRows(1), 0, 1e-8).has_value());
    // Noise makes the exact fit infeasible elsewhere.
    const SampleSet noisy = test::mixture_samples(unit, 200, 28, 0.1);
    CHECK_FALSE(orthant_row(noisy.xs, noisy.ys, 0, 1e-8).has_value());
    const Layer2Estimate est = learn_layer2(s, Layer2Method::LP);
    CHECK(est.tiebroken[0]);
    CHECK(est.tiebroken[1]);
    CHECK(relative_frobenius(est.b_hat, unit.b) <= 1e-12);
  }

  TEST_CASE("LP layer 2 on noisy data fails as infeasible") {
    const ResidualUnit unit = test::random_unit(2, 2, 29);
    const SampleSet s = test::mixture_samples(unit, 200, 30, 0.2);
    try {
      learn_layer2(s, Layer2Method::LP);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::SolverFailed);
      CHECK(std::string(e.what()).find("Infeasible") != std::string::npos);
    }
    const Layer2Estimate slack = learn_layer2(s, Layer2Method::SlackLP);
    CHECK(slack.objective > 0.0);
  }
}
