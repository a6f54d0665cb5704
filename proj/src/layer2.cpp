#include "resunit/layer2.hpp"

#include <algorithm>
#include <string>

#include "resunit/error.hpp"
#include "resunit/numerics.hpp"
#include "resunit/programs.hpp"

namespace resunit {

std::string_view to_string(Layer2Method method) {
  switch (method) {
    case Layer2Method::QP: return "qp";
    case Layer2Method::LP: return "lp";
    case Layer2Method::SlackLP: return "slack-lp";
  }
  return "unknown";
}

std::string_view to_string(Layer2Path path) {
  switch (path) {
    case Layer2Path::Unique: return "unique";
    case Layer2Path::GeneralRescaled: return "general";
  }
  return "unknown";
}

Layer2Method parse_layer2_method(std::string_view text) {
  if (text == "qp") return Layer2Method::QP;
  if (text == "lp") return Layer2Method::LP;
  if (text == "slack-lp") return Layer2Method::SlackLP;
  throw Error(ErrorKind::InvalidArgument, "unknown method '" + std::string(text) + "' (expected qp, lp or slack-lp)");
}

QpProblem build_layer2_qp(const Mat& xs, const Mat& ys) { return build_joint_qp(ys, xs); }

LpProblem build_layer2_lp(const Mat& xs, const Mat& ys) { return build_joint_lp(ys, xs); }

RescaleResult rescale_layer2(const Mat& xs, const Mat& ys, const Mat& c_hat, const RescaleConfig& cfg) {
  if (cfg.eps_tol <= 0.0) throw Error(ErrorKind::InvalidArgument, "eps_tol must be positive");
  if (xs.rows() != ys.rows() || c_hat.rows() != xs.cols() || c_hat.cols() != ys.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "rescale_layer2: inconsistent shapes");
  }
  const Index n = xs.rows();
  const Index d = xs.cols();
  const Mat cy = ys * c_hat.transpose();
  RescaleResult out;
  out.k = Vec::Ones(d);
  out.rows.resize(d);
  for (Index j = 0; j < d; ++j) {
    RowScale& row = out.rows[j];
    double sxx = 0.0;
    double sxt = 0.0;
    double st = 0.0;
    double stt = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double x = xs(i, j);
      if (!(x < 0.0)) continue;
      const double t = cy(i, j);
      sxx += x * x;
      sxt += x * t;
      st += t;
      stt += t * t;
      ++row.samples;
    }
    if (row.samples < cfg.min_neg_samples || sxx <= 0.0) {
      row.degenerate = true;
      continue;
    }
    const double cnt = static_cast<double>(row.samples);
    const double k = sxt / sxx;
    row.lr_objective = std::max(0.0, 0.5 * (stt - 2.0 * k * sxt + k * k * sxx) / cnt);
    const double mean_t = st / cnt;
    const double var_t = std::max(0.0, stt / cnt - mean_t * mean_t);
    if (row.lr_objective > cfg.eps_tol * var_t) {
      row.gated = true;
      continue;
    }
    if (!(k > 0.0)) {
      row.degenerate = true;
      continue;
    }
    row.k = k;
    out.k(j) = k;
  }
  return out;
}

std::optional<Vec> orthant_row(const Mat& xs, const Mat& ys, Index j, double tol) {
  std::vector<Index> neg;
  for (Index i = 0; i < xs.rows(); ++i) {
    if ((xs.row(i).array() < 0.0).all()) neg.push_back(i);
  }
  if (static_cast<Index>(neg.size()) < ys.cols()) return std::nullopt;
  const Mat yn = ys(neg, Eigen::all);
  const Mat xn = xs(neg, std::vector<Index>{j});
  Vec c;
  try {
    c = lls_solve(yn, xn).coeffs.row(0).transpose();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::RankDeficient) return std::nullopt;
    throw;
  }
  const Vec slack = ys * c - xs.col(j);
  if (!(slack.minCoeff() >= -tol)) return std::nullopt;
  return c;
}

Mat recover_b_general(const Mat& ys, const Mat& c_hat, const Vec& k_hat) {
  if (c_hat.rows() != k_hat.size() || c_hat.cols() != ys.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "recover_b_general: inconsistent shapes");
  }
  if ((k_hat.array() <= 0.0).any()) {
    throw Error(ErrorKind::InvalidArgument, "scale factors must be strictly positive");
  }
  const Mat corrected = ys * c_hat.transpose() * k_hat.cwiseInverse().asDiagonal();
  return lls_solve(corrected, ys).coeffs;
}

Layer2Estimate learn_layer2(const SampleSet& samples, Layer2Method method, const Layer2Config& cfg) {
  const Index n = samples.n();
  const Index d = samples.d();
  const Index m = samples.m();
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "learn_layer2 needs at least one sample");
  if (samples.ys.rows() != n) throw Error(ErrorKind::DimensionMismatch, "xs and ys sample counts differ");

  Layer2Estimate est;
  if (n < d) {
    est.warnings.push_back("n=" + std::to_string(n) + " < d=" + std::to_string(d) +
                           ": layer-2 estimate is underdetermined");
  }
  est.c_hat = Mat::Zero(d, m);
  est.xi_hat = Mat::Zero(n, d);
  est.row_status.resize(d);
  est.tiebroken.assign(static_cast<std::size_t>(d), false);
  const double tie_tol = cfg.solver.feas_tol * std::max(1.0, samples.xs.cwiseAbs().maxCoeff());

  for (Index j = 0; j < d; ++j) {
    const Vec t = samples.xs.col(j);
    SolveReport rep;
    switch (method) {
      case Layer2Method::QP: rep = solve_qp(build_row_qp(samples.ys, t), cfg.solver); break;
      case Layer2Method::LP: rep = solve_lp(build_row_lp(samples.ys, t), cfg.solver); break;
      case Layer2Method::SlackLP: rep = solve_lp(build_row_slack_lp(samples.ys, t), cfg.solver); break;
    }
    est.row_status[j] = rep.status;
    if (rep.status != SolveStatus::Optimal) {
      throw Error(ErrorKind::SolverFailed,
                  "layer 2 row " + std::to_string(j) + ": " + std::string(to_string(rep.status)),
                  static_cast<double>(j));
    }
    est.c_hat.row(j) = rep.point.head(m).transpose();
    if (method == Layer2Method::QP) est.xi_hat.col(j) = rep.point.tail(n);
    est.objective += rep.objective_value;
    if (cfg.orthant_tiebreak) {
      if (auto c = orthant_row(samples.xs, samples.ys, j, tie_tol)) {
        est.c_hat.row(j) = c->transpose();
        if (method == Layer2Method::QP) est.xi_hat.col(j) = relu(Vec(samples.ys * *c - t));
        est.tiebroken[static_cast<std::size_t>(j)] = true;
      }
    }
  }
  if (method != Layer2Method::QP) {
    est.xi_hat = samples.ys * est.c_hat.transpose() - samples.xs;
    if (method == Layer2Method::SlackLP) est.xi_hat = relu(est.xi_hat);
  }

  if (cfg.path == Layer2Path::Unique) {
    if (m != d) {
      est.warnings.push_back("unique path needs m == d; using the general path");
    } else {
      try {
        est.b_hat = invert(est.c_hat);
        est.k_hat = Vec::Ones(d);
        est.hidden = samples.ys * est.c_hat.transpose() - samples.xs;
        est.used_path = Layer2Path::Unique;
        return est;
      } catch (const Error& e) {
        est.warnings.push_back(std::string("C_hat not invertible (") + e.what() + "); using the general path");
      }
    }
  }

  const RescaleResult rs = rescale_layer2(samples.xs, samples.ys, est.c_hat, cfg.rescale);
  for (Index j = 0; j < d; ++j) {
    if (rs.rows[j].degenerate) {
      est.warnings.push_back("layer-2 scale factor " + std::to_string(j) + " degenerate (" +
                             std::to_string(rs.rows[j].samples) + " samples with x_j < 0); k set to 1");
    }
  }
  est.k_hat = rs.k;
  try {
    est.b_hat = recover_b_general(samples.ys, est.c_hat, est.k_hat);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::RankDeficient) throw;
    throw Error(ErrorKind::SingularCHat, std::string("C_hat y is rank deficient: ") + e.what(),
                condition_number(est.c_hat));
  }
  est.xi_hat = (est.xi_hat + samples.xs) * est.k_hat.cwiseInverse().asDiagonal();
  est.xi_hat -= samples.xs;
  est.hidden = samples.ys * est.c_hat.transpose() * est.k_hat.cwiseInverse().asDiagonal();
  est.hidden -= samples.xs;
  est.used_path = Layer2Path::GeneralRescaled;
  return est;
}

}  // namespace resunit
