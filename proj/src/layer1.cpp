#include "resunit/layer1.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "resunit/error.hpp"
#include "resunit/numerics.hpp"
#include "resunit/programs.hpp"

namespace resunit {

std::string_view to_string(Layer1Method method) {
  switch (method) {
    case Layer1Method::QP: return "qp";
    case Layer1Method::LP: return "lp";
    case Layer1Method::SlackLP: return "slack-lp";
  }
  return "unknown";
}

Layer1Method parse_layer1_method(std::string_view text) {
  if (text == "qp") return Layer1Method::QP;
  if (text == "lp") return Layer1Method::LP;
  if (text == "slack-lp") return Layer1Method::SlackLP;
  throw Error(ErrorKind::InvalidArgument, "unknown method '" + std::string(text) + "' (expected qp, lp or slack-lp)");
}

QpProblem build_layer1_qp(const Mat& xs, const Mat& hs) { return build_joint_qp(-xs, -hs); }

LpProblem build_layer1_lp(const Mat& xs, const Mat& hs) { return build_joint_lp(-xs, -hs); }

double activation_threshold(const Mat& hs, Index j, const Layer1Config& cfg) {
  const Vec col = hs.col(j).cwiseAbs();
  if (col.size() == 0) return 0.0;
  const double floor = 1e-12 * col.maxCoeff();
  std::vector<double> nonzero;
  for (Index i = 0; i < col.size(); ++i) {
    if (col(i) > floor) nonzero.push_back(col(i));
  }
  if (nonzero.empty()) return 0.0;
  const auto mid = nonzero.begin() + static_cast<std::ptrdiff_t>(nonzero.size() / 2);
  std::nth_element(nonzero.begin(), mid, nonzero.end());
  return cfg.activation_rel_threshold * *mid;
}

ScaleFit estimate_row_scale(const Mat& xs, const Mat& hs, const Vec& raw_row, Index j,
                            const Layer1Config& cfg) {
  if (xs.rows() != hs.rows() || xs.cols() != raw_row.size() || j < 0 || j >= hs.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "estimate_row_scale: inconsistent shapes");
  }
  const double thresh = activation_threshold(hs, j, cfg);
  const Vec ax = xs * raw_row;
  ScaleFit fit;
  double shh = 0.0;
  double sha = 0.0;
  double saa = 0.0;
  for (Index i = 0; i < xs.rows(); ++i) {
    const double h = hs(i, j);
    if (!(h > thresh)) continue;
    shh += h * h;
    sha += h * ax(i);
    saa += ax(i) * ax(i);
    ++fit.samples;
  }
  if (fit.samples < cfg.min_pos_samples || shh <= 0.0) {
    throw Error(ErrorKind::DegenerateRow,
                "row " + std::to_string(j) + " has " + std::to_string(fit.samples) +
                    " activated samples (need " + std::to_string(cfg.min_pos_samples) + ")",
                static_cast<double>(j));
  }
  const double k = sha / shh;
  fit.residual = std::sqrt(std::max(0.0, saa - 2.0 * k * sha + k * k * shh));
  fit.k = std::clamp(k, cfg.k_min, 1.0);
  fit.clamped = k < cfg.k_min - cfg.k_tol || k > 1.0 + cfg.k_tol;
  return fit;
}

std::optional<Vec> orthant_row(const HiddenSampleSet& samples, Index j, double tol) {
  std::vector<Index> pos;
  for (Index i = 0; i < samples.n(); ++i) {
    if ((samples.xs.row(i).array() > 0.0).all()) pos.push_back(i);
  }
  if (static_cast<Index>(pos.size()) < samples.d()) return std::nullopt;
  const Mat xp = samples.xs(pos, Eigen::all);
  const Mat hp = samples.hs(pos, std::vector<Index>{j});
  Vec a;
  try {
    a = lls_solve(xp, hp).coeffs.row(0).transpose();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::RankDeficient) return std::nullopt;
    throw;
  }
  const Vec slack = samples.hs.col(j) - samples.xs * a;
  if (!(slack.minCoeff() >= -tol)) return std::nullopt;
  return a;
}

namespace {

void apply_rescale(const HiddenSampleSet& samples, const Layer1Config& cfg, Layer1Estimate& est) {
  const Index d = samples.d();
  est.k_hat = Vec::Ones(d);
  est.a_hat = est.raw_a;
  est.rows.resize(d);
  for (Index j = 0; j < d; ++j) {
    Layer1Row& row = est.rows[j];
    try {
      row.scale = estimate_row_scale(samples.xs, samples.hs, est.raw_a.row(j).transpose(), j, cfg);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DegenerateRow) throw;
      row.degenerate = true;
      est.warnings.push_back(std::string(e.what()) + "; row left unscaled");
      continue;
    }
    if (row.scale.clamped) {
      est.warnings.push_back("row " + std::to_string(j) + " scale factor clamped to " +
                             std::to_string(row.scale.k));
    }
    est.k_hat(j) = row.scale.k;
    est.a_hat.row(j) /= row.scale.k;
  }
}

struct RowSolution {
  Vec w;
  double objective = 0.0;
  bool centered = false;
  SolveStatus status = SolveStatus::Optimal;
};

[[noreturn]] void row_failure(Index j, std::string_view what, SolveStatus status) {
  throw Error(ErrorKind::SolverFailed,
              "layer 1 row " + std::to_string(j) + ": " + std::string(what) + " (" +
                  std::string(to_string(status)) + ")",
              static_cast<double>(j));
}

/// The analytic center of {w : u w >= t} when that set has an interior.
bool try_center(const Mat& u, const Vec& t, const SolverConfig& cfg, Vec& w) {
  const CenterReport c = analytic_center(build_row_lp(u, t), cfg);
  if (c.status != SolveStatus::Optimal || !c.has_interior) return false;
  w = c.point;
  return true;
}

RowSolution solve_row(const Mat& u, const Vec& t, Layer1Method method, const SolverConfig& cfg,
                      Index j, std::vector<std::string>& warnings) {
  const Index d = u.cols();
  RowSolution sol;
  switch (method) {
    case Layer1Method::LP: {
      const LpProblem lp = build_row_lp(u, t);
      const CenterReport c = analytic_center(lp, cfg);
      if (c.status == SolveStatus::Infeasible) {
        row_failure(j, "h - A x >= 0 is infeasible; noisy data needs the slack-lp method", c.status);
      }
      if (c.status == SolveStatus::Optimal) {
        sol.w = c.point;
        sol.centered = c.has_interior;
        break;
      }
      warnings.push_back("layer 1 row " + std::to_string(j) + ": analytic center failed (" +
                         std::string(to_string(c.status)) + "); using the simplex vertex");
      const SolveReport r = solve_lp(lp, cfg);
      if (r.status != SolveStatus::Optimal) row_failure(j, "LP", r.status);
      sol.w = r.point;
      break;
    }
    case Layer1Method::QP: {
      const QpProblem qp = build_row_qp(u, t);
      const SolveReport r = solve_qp(qp, cfg);
      if (r.status != SolveStatus::Optimal) row_failure(j, "QP", r.status);
      sol.w = r.point.head(d);
      sol.objective = r.objective_value;
      // A zero optimum means the optimal face is the whole polytope h - A x >= 0.
      if (r.objective_value <= 1e-10 * std::max(1.0, qp.constant) && try_center(u, t, cfg, sol.w)) {
        sol.centered = true;
      }
      break;
    }
    case Layer1Method::SlackLP: {
      if (try_center(u, t, cfg, sol.w)) {
        sol.centered = true;
        break;
      }
      const SolveReport r = solve_lp(build_row_slack_lp(u, t), cfg);
      if (r.status != SolveStatus::Optimal) row_failure(j, "slack LP", r.status);
      sol.w = r.point.head(d);
      sol.objective = r.objective_value;
      break;
    }
  }
  return sol;
}

}  // namespace

Layer1Estimate rescale_layer1(const HiddenSampleSet& samples, const Mat& raw_a, const Layer1Config& cfg) {
  if (raw_a.rows() != samples.d() || raw_a.cols() != samples.d() || samples.hs.rows() != samples.n() ||
      samples.hs.cols() != samples.d()) {
    throw Error(ErrorKind::DimensionMismatch, "rescale_layer1: inconsistent shapes");
  }
  Layer1Estimate est;
  est.raw_a = raw_a;
  apply_rescale(samples, cfg, est);
  return est;
}

Layer1Estimate learn_layer1(const HiddenSampleSet& samples, Layer1Method method, const Layer1Config& cfg) {
  const Index n = samples.n();
  const Index d = samples.d();
  if (samples.hs.rows() != n || samples.hs.cols() != d) {
    throw Error(ErrorKind::DimensionMismatch, "xs and hs must both be n x d");
  }
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "learn_layer1 needs at least one sample");

  Layer1Estimate est;
  if (n < d) {
    est.warnings.push_back("n=" + std::to_string(n) + " < d=" + std::to_string(d) +
                           ": layer-1 estimate is underdetermined");
  }
  est.raw_a = Mat::Zero(d, d);
  const Mat u = -samples.xs;
  std::vector<RowSolution> solutions;
  std::vector<bool> tiebroken(static_cast<std::size_t>(d), false);
  const double tie_tol = cfg.solver.feas_tol * std::max(1.0, samples.hs.cwiseAbs().maxCoeff());
  for (Index j = 0; j < d; ++j) {
    const Vec t = -samples.hs.col(j);
    RowSolution sol = solve_row(u, t, method, cfg.solver, j, est.warnings);
    if (cfg.orthant_tiebreak) {
      if (auto a = orthant_row(samples, j, tie_tol)) {
        sol.w = *a;
        tiebroken[static_cast<std::size_t>(j)] = true;
      }
    }
    est.raw_a.row(j) = sol.w.transpose();
    est.objective += sol.objective;
    solutions.push_back(std::move(sol));
  }
  apply_rescale(samples, cfg, est);
  for (Index j = 0; j < d; ++j) {
    est.rows[j].centered = solutions[j].centered;
    est.rows[j].status = solutions[j].status;
    est.rows[j].tiebroken = tiebroken[static_cast<std::size_t>(j)];
  }
  return est;
}

}  // namespace resunit
