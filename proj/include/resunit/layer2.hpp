#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "resunit/model.hpp"
#include "resunit/solver.hpp"
#include "resunit/types.hpp"

namespace resunit {

enum class Layer2Method { QP, LP, SlackLP };

/// Unique: B = C^-1, valid when m == d and no layer-1 row is a scale
/// transformation. GeneralRescaled: estimate scale factors, then fit B by
/// least squares; always valid and the default.
enum class Layer2Path { Unique, GeneralRescaled };

std::string_view to_string(Layer2Method method);
std::string_view to_string(Layer2Path path);
Layer2Method parse_layer2_method(std::string_view text);

struct RescaleConfig {
  double eps_tol = 1e-6;        ///< gate threshold, relative to var([C y]_j)
  Index min_neg_samples = 10;
};

struct Layer2Config {
  SolverConfig solver;
  RescaleConfig rescale;
  Layer2Path path = Layer2Path::GeneralRescaled;
  /// Among the minimizers of a row program, prefer the one that is tight on
  /// every sample whose inputs are all negative. With nonnegative A* those
  /// samples have inactive ReLUs, so the ground truth is always such a point.
  bool orthant_tiebreak = true;
};

struct Layer2Estimate {
  Mat c_hat;   ///< d x m, solver output
  Mat b_hat;   ///< m x d
  Mat xi_hat;  ///< n x d, estimates of (A* x_i)^+ (after scale correction)
  Mat hidden;  ///< n x d, diag(k)^-1 C y_i - x_i without clipping; the layer-1 targets
  Vec k_hat;   ///< d, all ones on the unique path
  Layer2Path used_path = Layer2Path::GeneralRescaled;
  double objective = 0.0;  ///< program objective summed over rows
  std::vector<SolveStatus> row_status;
  std::vector<bool> tiebroken;  ///< rows replaced by the all-negative-orthant fit
  std::vector<std::string> warnings;
};

/// Per-row scale-factor fit.
struct RowScale {
  double k = 1.0;
  double lr_objective = 0.0;  ///< (1/2n') sum ([Cy]_j - k x_j)^2 over x_j < 0
  Index samples = 0;
  bool gated = false;         ///< ratio not constant: k forced to 1
  bool degenerate = false;    ///< too few samples or nonpositive slope: k forced to 1
};

struct RescaleResult {
  Vec k;
  std::vector<RowScale> rows;
};

/// Layer-2 programs: u = ys, targets = xs, weights = rows of C.
QpProblem build_layer2_qp(const Mat& xs, const Mat& ys);
LpProblem build_layer2_lp(const Mat& xs, const Mat& ys);

Layer2Estimate learn_layer2(const SampleSet& samples, Layer2Method method,
                            const Layer2Config& cfg = {});

/// For each j, regresses [C y]_j on x_j over samples with x_j < 0 (no
/// intercept). When the LR objective exceeds eps_tol * var([C y]_j) on that
/// subset, k_j = 1.
RescaleResult rescale_layer2(const Mat& xs, const Mat& ys, const Mat& c_hat,
                             const RescaleConfig& cfg = {});

/// The row of C that solves [C y]_j = x_j exactly on the samples whose
/// inputs are all negative, if those samples determine it and it satisfies
/// C y - x >= -tol on every sample. Empty otherwise.
std::optional<Vec> orthant_row(const Mat& xs, const Mat& ys, Index j, double tol);

/// Least-squares fit of y = B diag(k)^-1 C y over all samples.
Mat recover_b_general(const Mat& ys, const Mat& c_hat, const Vec& k_hat);

}  // namespace resunit
