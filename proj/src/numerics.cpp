#include "resunit/numerics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "resunit/error.hpp"

namespace resunit {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::Singular: return "Singular";
    case ErrorKind::IllConditioned: return "IllConditioned";
    case ErrorKind::NotSymmetric: return "NotSymmetric";
    case ErrorKind::GenerationFailed: return "GenerationFailed";
    case ErrorKind::SolverFailed: return "SolverFailed";
    case ErrorKind::SingularCHat: return "SingularCHat";
    case ErrorKind::DegenerateRow: return "DegenerateRow";
    case ErrorKind::Io: return "IoError";
    case ErrorKind::Parse: return "ParseError";
  }
  return "Unknown";
}

LlsFit lls_solve(const Mat& inputs, const Mat& targets) {
  if (inputs.rows() != targets.rows()) {
    throw Error(ErrorKind::DimensionMismatch,
                "lls_solve: inputs has " + std::to_string(inputs.rows()) +
                    " rows, targets has " + std::to_string(targets.rows()));
  }
  const Index n = inputs.rows();
  const Index p = inputs.cols();
  if (n < p || p == 0) {
    throw Error(ErrorKind::RankDeficient,
                "lls_solve: need at least as many samples as regressors (n=" +
                    std::to_string(n) + ", p=" + std::to_string(p) + ")");
  }
  Eigen::MatrixXd design = inputs;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(static_cast<double>(std::max(n, p)) *
                  std::numeric_limits<double>::epsilon());
  if (qr.rank() < p) {
    throw Error(ErrorKind::RankDeficient,
                "lls_solve: design rank " + std::to_string(qr.rank()) + " < " +
                    std::to_string(p),
                static_cast<double>(qr.rank()));
  }
  Eigen::MatrixXd rhs = targets;
  Eigen::MatrixXd w = qr.solve(rhs);  // p x q
  LlsFit fit;
  fit.coeffs = w.transpose();
  fit.residual_norm = (design * w - rhs).norm();
  return fit;
}

double condition_number(const Mat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  if (smin == 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / smin;
}

Index numerical_rank(const Mat& m) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  const double thresh = static_cast<double>(std::max(m.rows(), m.cols())) *
                        std::numeric_limits<double>::epsilon() * s(0);
  Index r = 0;
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) > thresh) ++r;
  }
  return r;
}

Mat invert(const Mat& m, double max_condition) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "invert: matrix is not square");
  }
  const double cond = condition_number(m);
  if (!std::isfinite(cond)) {
    throw Error(ErrorKind::Singular, "invert: matrix is singular");
  }
  if (cond > max_condition) {
    throw Error(ErrorKind::IllConditioned,
                "invert: condition estimate " + std::to_string(cond) +
                    " exceeds " + std::to_string(max_condition),
                cond);
  }
  Eigen::MatrixXd dense = m;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(dense);
  return lu.inverse();
}

bool is_psd(const Mat& m, double tol) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "is_psd: matrix is not square");
  }
  if (m.size() == 0) return true;
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > tol) {
    throw Error(ErrorKind::NotSymmetric,
                "is_psd: asymmetry " + std::to_string(asym) + " exceeds tol",
                asym);
  }
  Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym,
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -tol;
}

double relative_frobenius(const Mat& estimate, const Mat& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols()) {
    throw Error(ErrorKind::DimensionMismatch,
                "relative_frobenius: shapes differ");
  }
  return (estimate - truth).norm() / truth.norm();
}

bool all_finite(const Mat& m) { return m.allFinite(); }

}  // namespace resunit
