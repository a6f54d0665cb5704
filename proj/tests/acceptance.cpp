/// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "resunit/baselines.hpp"
#include "resunit/eval.hpp"
#include "resunit/grid.hpp"
#include "resunit/layer2.hpp"
#include "resunit/numerics.hpp"
#include "resunit/programs.hpp"
#include "resunit/solver.hpp"

using namespace resunit;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [fail]");
  }
};

/// Mean of a metric per cell, keyed by (sigma, method).
std::map<std::pair<double, Method>, AggregateRow> by_sigma_method(const GridResult& r) {
  std::map<std::pair<double, Method>, AggregateRow> out;
  for (const AggregateRow& a : r.aggregates) out[{a.cell.sigma, a.cell.method}] = a;
  return out;
}

Outcome exact_recovery() {
  Outcome o;
  double worst_l2 = 0.0;
  double worst_l1 = 0.0;
  double slowest = 0.0;
  for (std::uint64_t t = 0; t < 20; ++t) {
    const Index d = t < 10 ? 2 : 4;
    const ResidualUnit unit = test::random_unit(d, d, 100 + t);
    const SampleSet s = test::mixture_samples(unit, 100 * d, 200 + t);
    const auto start = Clock::now();
    const PipelineResult res = full_pipeline(s, Method::LP);
    slowest = std::max(slowest, seconds_since(start));
    worst_l2 = std::max(worst_l2, relative_frobenius(res.layer2.b_hat, unit.b));
    worst_l1 = std::max(worst_l1, relative_frobenius(res.layer1.a_hat, unit.a));
  }
  o.require(worst_l2 <= 1e-4, "max layer-2 error " + fmt("%.3g", worst_l2) + " <= 1e-4");
  o.require(worst_l1 <= 1e-2, "max layer-1 error " + fmt("%.3g", worst_l1) + " <= 1e-2");
  o.require(slowest <= 10.0, "slowest teacher " + fmt("%.2f", slowest) + " s <= 10 s");
  return o;
}

Outcome table1() {
  Outcome o;
  TrialGrid g;
  g.dims = {16};
  g.sample_sizes = {512};
  g.methods = {Method::LP, Method::Sgd};
  g.teachers = 32;
  g.trials_per_cell = 4;
  g.base_seed = 2;
  const auto start = Clock::now();
  const GridResult r = run_grid(g);
  const double elapsed = seconds_since(start);
  const AggregateRow& ours = r.aggregates[0];
  const AggregateRow& sgd = r.aggregates[1];
  o.require(ours.failures == 0, "ours failures " + std::to_string(ours.failures));
  o.require(ours.layer2.mean <= 1e-3, "ours layer-2 " + fmt("%.3g", ours.layer2.mean) + " <= 1e-3");
  o.require(ours.layer1.mean >= 0.01 && ours.layer1.mean <= 0.08,
            "ours layer-1 " + fmt("%.4f", ours.layer1.mean) + " +- " + fmt("%.4f", ours.layer1.std) +
                " in [0.01, 0.08]");
  o.require(ours.output.mean >= 0.02 && ours.output.mean <= 0.10,
            "ours output " + fmt("%.4f", ours.output.mean) + " +- " + fmt("%.4f", ours.output.std) +
                " in [0.02, 0.10]");
  o.require(sgd.output.mean >= 0.25,
            "SGD output " + fmt("%.4f", sgd.output.mean) + " +- " + fmt("%.4f", sgd.output.std) + " >= 0.25");
  o.require(elapsed <= 1800.0, "runtime " + fmt("%.0f", elapsed) + " s <= 1800 s");
  return o;
}

Outcome vanilla_rates() {
  Outcome o;
  TrialGrid g;
  g.dims = {4, 6};
  g.sample_sizes = {100, 500, 1000};
  g.methods = {Method::VanillaLr};
  g.trials_per_cell = 300;
  g.test_set_size = 100;
  g.base_seed = 3;
  g.input_kind = InputDistribution::Kind::GaussianIid;
  g.input_mean = 0.0;
  g.input_std = 1.0;
  const auto start = Clock::now();
  const GridResult r = run_grid(g);
  const double elapsed = seconds_since(start);
  std::map<std::pair<Index, Index>, double> rate;
  for (const AggregateRow& a : r.aggregates) rate[{a.cell.d, a.cell.n}] = a.success_rate;
  o.require(rate[{4, 500}] >= 0.95, "(4, 500) " + fmt("%.3f", rate[{4, 500}]) + " >= 0.95");
  o.require(rate[{4, 100}] >= 0.05 && rate[{4, 100}] <= 0.25,
            "(4, 100) " + fmt("%.3f", rate[{4, 100}]) + " in [0.05, 0.25]");
  o.require(rate[{6, 1000}] >= 0.45 && rate[{6, 1000}] <= 0.80,
            "(6, 1000) " + fmt("%.3f", rate[{6, 1000}]) + " in [0.45, 0.80]");
  o.require(elapsed <= 300.0, "runtime " + fmt("%.1f", elapsed) + " s <= 300 s");
  return o;
}

Outcome sample_bound() {
  Outcome o;
  bool ok = true;
  for (Index d = 1; d <= 20; ++d) {
    ok = ok && expected_sample_bound(d) == static_cast<double>(d) * std::pow(2.0, static_cast<double>(d + 1));
  }
  o.require(ok, "d * 2^(d+1) for d = 1..20");
  return o;
}

/// True when every row of the layer-2 LP feasible set is a single point:
/// each coordinate has equal minimum and maximum over the set.
bool feasible_set_is_point(const SampleSet& s) {
  for (Index j = 0; j < s.d(); ++j) {
    LpProblem lp = build_row_lp(s.ys, s.xs.col(j));
    for (Index k = 0; k < s.m(); ++k) {
      double ends[2];
      for (int side = 0; side < 2; ++side) {
        lp.objective = Vec::Zero(s.m());
        lp.objective(k) = side == 0 ? 1.0 : -1.0;
        const SolveReport r = solve_lp(lp);
        if (r.status != SolveStatus::Optimal) return false;
        ends[side] = r.point(k);
      }
      if (ends[1] - ends[0] > 1e-9 * std::max(1.0, std::abs(ends[0]))) return false;
    }
  }
  return true;
}

Outcome qp_lp_equivalence() {
  Outcome o;
  double worst_cross = 0.0;
  double worst_b = 0.0;
  int compared = 0;
  for (std::uint64_t t = 0; t < 50; ++t) {
    const Index d = 1 + static_cast<Index>(t % 4);
    const Index n = 50 + 50 * static_cast<Index>((t / 4) % 4);
    const ResidualUnit unit = test::random_unit(d, d, 300 + t);
    const SampleSet s = test::mixture_samples(unit, n, 400 + t);
    const Layer2Estimate lp = learn_layer2(s, Layer2Method::LP);
    const Layer2Estimate qp = learn_layer2(s, Layer2Method::QP);
    // LP constraints: Y c - x >= 0. QP constraints: xi = Y c - x >= 0.
    for (const Mat& c : {lp.c_hat, qp.c_hat}) {
      worst_cross = std::max(worst_cross, -std::min(0.0, (s.ys * c.transpose() - s.xs).minCoeff()));
    }
    worst_cross = std::max(worst_cross, -std::min(0.0, qp.xi_hat.minCoeff()));
    if (satisfies_unique_layer2(unit) && feasible_set_is_point(s)) {
      worst_b = std::max(worst_b, relative_frobenius(qp.b_hat, lp.b_hat));
      ++compared;
    }
  }
  o.require(worst_cross <= 1e-7, "max cross-constraint violation " + fmt("%.3g", worst_cross) + " <= 1e-7");
  o.require(worst_b <= 1e-5, "max b_hat disagreement " + fmt("%.3g", worst_b) + " <= 1e-5 over " +
                                 std::to_string(compared) + " unique instances");
  return o;
}

Outcome noise_trend() {
  Outcome o;
  TrialGrid g;
  g.dims = {10};
  g.sample_sizes = {512};
  g.noise_sigmas = {0.0, 0.05, 0.1, 0.2};
  g.methods = {Method::QP, Method::SlackLP, Method::Sgd};
  g.trials_per_cell = 8;
  g.base_seed = 6;
  const GridResult r = run_grid(g);
  auto cells = by_sigma_method(r);
  std::string table;
  bool monotone = true;
  bool below = true;
  double prev_qp = -1.0;
  double prev_slack = -1.0;
  for (double sigma : g.noise_sigmas) {
    const double qp = cells[{sigma, Method::QP}].output.mean;
    const double slack = cells[{sigma, Method::SlackLP}].output.mean;
    const double sgd = cells[{sigma, Method::Sgd}].output.mean;
    monotone = monotone && qp >= prev_qp && slack >= prev_slack;
    below = below && qp < sgd && slack < sgd;
    prev_qp = qp;
    prev_slack = slack;
    table += (table.empty() ? "" : ", ") + fmt("sigma %.2f", sigma) + fmt(" qp %.4f", qp) +
             fmt(" slack %.4f", slack) + fmt(" sgd %.4f", sgd);
  }
  o.require(monotone, "QP and slack-LP non-decreasing in sigma");
  o.require(below, "both below SGD (" + table + ")");
  return o;
}

Outcome consistency_trend() {
  Outcome o;
  TrialGrid g;
  g.dims = {4};
  g.sample_sizes = {64, 128, 256, 512};
  g.methods = {Method::LP};
  g.trials_per_cell = 20;
  g.base_seed = 7;
  g.learn.pipeline.layer2.orthant_tiebreak = false;
  g.learn.pipeline.layer1.orthant_tiebreak = false;
  const GridResult r = run_grid(g);
  std::map<Index, std::vector<double>> per_n;
  for (const TrialRow& row : r.trials) per_n[row.cell.n].push_back(row.output_rel);
  std::vector<double> medians;
  std::string list;
  for (Index n : g.sample_sizes) {
    medians.push_back(median(per_n[n]));
    list += (list.empty() ? "" : ", ") + std::to_string(n) + ": " + fmt("%.4g", medians.back());
  }
  int violations = 0;
  bool small = true;
  for (std::size_t i = 1; i < medians.size(); ++i) {
    if (medians[i] >= medians[i - 1]) {
      ++violations;
      small = small && medians[i] <= 1.2 * medians[i - 1];
    }
  }
  o.require(violations <= 1 && small, "medians " + list + " with " + std::to_string(violations) + " violations");
  return o;
}

Outcome solver_suite() {
  Outcome o;
  bool psd = true;
  for (std::uint64_t t = 0; t < 10; ++t) {
    const ResidualUnit unit = test::random_unit(1 + static_cast<Index>(t % 4), 2 + static_cast<Index>(t % 4), 500 + t);
    const SampleSet s = test::mixture_samples(unit, 40, 600 + t);
    const Mat hidden = relu(Mat(s.xs * unit.a.transpose()));
    psd = psd && is_psd(build_layer2_qp(s.xs, s.ys).hessian) && is_psd(build_layer1_qp(s.xs, hidden).hessian) &&
          is_psd(build_row_qp(s.ys, s.xs.col(0)).hessian);
  }
  o.require(psd, "assembled Hessians PSD");

  double worst_comp = 0.0;
  int qp_optimal = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const QpProblem qp = test::random_qp(seed);
    const SolveReport r = solve_qp(qp);
    if (r.status != SolveStatus::Optimal) continue;
    ++qp_optimal;
    for (Index i : qp.nonneg) worst_comp = std::max(worst_comp, std::abs(r.point(i) * r.dual(i)));
  }
  o.require(qp_optimal == 100 && worst_comp <= 1e-6, std::to_string(qp_optimal) +
                                                          "/100 random QPs optimal, max complementarity " +
                                                          fmt("%.2g", worst_comp));

  int detected = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    detected += solve_lp(test::contradictory_lp(seed)).status == SolveStatus::Infeasible;
  }
  o.require(detected == 50, std::to_string(detected) + "/50 contradictory LPs infeasible");

  double worst_slack = 0.0;
  for (std::uint64_t t = 0; t < 10; ++t) {
    const Index d = 1 + static_cast<Index>(t % 3);
    const ResidualUnit unit = test::random_unit(d, d, 700 + t);
    const SampleSet s = test::mixture_samples(unit, 60, 800 + t);
    const SolveReport r = solve_lp(build_slack_lp(s.xs, s.ys));
    worst_slack = std::max(worst_slack, r.status == SolveStatus::Optimal ? std::abs(r.objective_value) : INFINITY);
  }
  o.require(worst_slack <= 1e-9, "noiseless slack-LP objective " + fmt("%.2g", worst_slack));
  return o;
}

Outcome scale_oracle() {
  Outcome o;
  double worst_scan = 0.0;
  double worst_theory = 0.0;
  for (std::uint64_t t = 0; t < 10; ++t) {
    const ResidualUnit unit = test::random_unit(1, 1, 900 + t, false);
    const double a = unit.a(0, 0);
    const double b = unit.b(0, 0);
    const SampleSet s = test::mixture_samples(unit, 2000, 1000 + t);
    LpProblem lp = build_row_lp(s.ys, s.xs.col(0));
    lp.objective = Vec::Ones(1);
    const SolveReport lo = solve_lp(lp);
    lp.objective = -Vec::Ones(1);
    const SolveReport hi = solve_lp(lp);
    if (lo.status != SolveStatus::Optimal || hi.status != SolveStatus::Optimal) {
      worst_scan = INFINITY;
      continue;
    }
    // The feasible set is an interval in c, or its mirror image when b < 0.
    const double end = 2.0 / b;
    const double step = 1e-4;
    const long steps = std::lround(std::abs(end) / step);
    double scan_lo = INFINITY;
    double scan_hi = -INFINITY;
    for (long k = 0; k <= steps; ++k) {
      const double c = (end < 0 ? end : 0.0) + k * step;
      if (((s.ys.col(0) * c - s.xs.col(0)).array() >= 0.0).all()) {
        scan_lo = std::min(scan_lo, c);
        scan_hi = std::max(scan_hi, c);
      }
    }
    const double c_lo = lo.point(0);
    const double c_hi = hi.point(0);
    worst_scan = std::max({worst_scan, std::abs(scan_lo - c_lo), std::abs(scan_hi - c_hi)});
    const double t1 = 1.0 / (b * (1.0 + a));
    const double t2 = 1.0 / b;
    worst_theory = std::max({worst_theory, std::abs(std::min(t1, t2) - c_lo), std::abs(std::max(t1, t2) - c_hi)});
  }
  o.require(worst_scan <= 1e-3, "solver vs scan boundary gap " + fmt("%.2g", worst_scan) + " <= 1e-3");
  o.require(worst_theory <= 1e-3, "solver vs [1/(b(1+a)), 1/b] gap " + fmt("%.2g", worst_theory) + " <= 1e-3");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, exact_recovery}, {2, table1},        {3, vanilla_rates},     {4, sample_bound}, {5, qp_lp_equivalence},
      {6, noise_trend},    {7, consistency_trend}, {8, solver_suite}, {9, scale_oracle},
  };
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  int failures = 0;
  for (const auto& [id, run] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto start = Clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failures += !o.pass;
    std::printf("criterion %d: %s (%s) [%.1f s]\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), seconds_since(start));
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
