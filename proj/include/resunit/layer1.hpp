#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "resunit/solver.hpp"
#include "resunit/types.hpp"

namespace resunit {

enum class Layer1Method { QP, LP, SlackLP };

std::string_view to_string(Layer1Method method);
Layer1Method parse_layer1_method(std::string_view text);

/// Inputs paired with (estimates of) the hidden activations (A* x)^+.
struct HiddenSampleSet {
  Mat xs;  ///< n x d
  Mat hs;  ///< n x d

  Index n() const { return xs.rows(); }
  Index d() const { return xs.cols(); }
};

struct Layer1Config {
  SolverConfig solver;
  double activation_rel_threshold = 1e-8;  ///< times the median nonzero |h_j|
  double k_min = 1e-4;
  double k_tol = 1e-6;                     ///< slack before a clamped k is reported
  Index min_pos_samples = 10;
  /// Among the minimizers of a row program, prefer the one that is tight on
  /// every sample whose inputs are all positive. With nonnegative A* those
  /// samples have active ReLUs, so the ground truth is always such a point.
  bool orthant_tiebreak = true;
};

struct ScaleFit {
  double k = 1.0;
  double residual = 0.0;  ///< |raw_row x - k h_j| over activated samples
  Index samples = 0;
  bool clamped = false;
};

struct Layer1Row {
  ScaleFit scale;
  bool degenerate = false;  ///< too few activated samples; row left unscaled
  bool centered = false;    ///< raw row is the analytic center of the feasible polytope
  bool tiebroken = false;   ///< raw row is the all-positive-orthant fit
  SolveStatus status = SolveStatus::Optimal;
};

struct Layer1Estimate {
  Mat a_hat;  ///< d x d
  Vec k_hat;  ///< d
  Mat raw_a;  ///< d x d, before rescaling
  double objective = 0.0;
  std::vector<Layer1Row> rows;
  std::vector<std::string> warnings;
};

/// Layer-1 programs: h_i - A x_i >= 0 (LP) and the matching QP with
/// function estimates phi_i >= 0.
QpProblem build_layer1_qp(const Mat& xs, const Mat& hs);
LpProblem build_layer1_lp(const Mat& xs, const Mat& hs);

/// Activation threshold for column j of `hs`.
double activation_threshold(const Mat& hs, Index j, const Layer1Config& cfg);

/// Slope of raw_row x regressed on h_j (no intercept) over samples with
/// h_j above the activation threshold, clamped to [k_min, 1].
/// Throws Error{DegenerateRow} with fewer than min_pos_samples activations.
ScaleFit estimate_row_scale(const Mat& xs, const Mat& hs, const Vec& raw_row, Index j,
                            const Layer1Config& cfg = {});

/// The row of A that solves A_j x = h_j exactly on the samples whose inputs
/// are all positive, if those samples determine it and it satisfies
/// h_j - A_j x >= -tol on every sample. Empty otherwise.
std::optional<Vec> orthant_row(const HiddenSampleSet& samples, Index j, double tol);

/// Rescales every row of `raw_a`; degenerate rows keep k = 1 and are flagged.
Layer1Estimate rescale_layer1(const HiddenSampleSet& samples, const Mat& raw_a,
                              const Layer1Config& cfg = {});

Layer1Estimate learn_layer1(const HiddenSampleSet& samples, Layer1Method method,
                            const Layer1Config& cfg = {});

}  // namespace resunit
