#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "resunit/model.hpp"
#include "resunit/types.hpp"

namespace resunit {

struct VanillaLrResult {
  std::optional<Mat> a_hat;  ///< d x d
  std::optional<Mat> b_hat;  ///< m x d
  Index n_neg_used = 0;
  Index n_pos_used = 0;
  bool success = false;
};

/// Regresses y on x over the all-negative inputs of the first floor(n/2)
/// samples (y = B* x there) and over the all-positive inputs of the rest
/// (y = B*(A* + I) x), then solves B A~ = D for A = A~ - I.
VanillaLrResult vanilla_lr(const SampleSet& samples);

/// d * 2^(d+1): the expected-sample lower bound for symmetric coordinate signs.
double expected_sample_bound(Index d);

struct SgdConfig {
  enum class Init { GaussianSmall, TeacherPerturbed };

  Index batch_size = 32;
  int epochs = 256;
  double eta0 = 1e-3;
  double gamma = 1e-5;  ///< eta = eta0 / (1 + gamma * epoch)
  std::uint64_t seed = 0;
  Init init = Init::GaussianSmall;
  double init_scale = 0.1;  ///< std of the initial entries or of the teacher perturbation
  std::optional<ResidualUnit> teacher;  ///< required by TeacherPerturbed
  double divergence_factor = 1e6;
};

struct EpochLoss {
  int epoch = 0;
  double mean_loss = 0.0;
  double eta = 0.0;
};

struct SgdResult {
  Mat a_hat;
  Mat b_hat;
  std::vector<EpochLoss> trace;
  double initial_loss = 0.0;
  bool diverged = false;
};

struct BatchGradient {
  double loss = 0.0;  ///< mean of 1/2 |B[(Ax)^+ + x] - y|^2 over the batch
  Mat grad_a;
  Mat grad_b;
};

/// Loss and gradient over the samples listed in `batch`. The ReLU derivative
/// at 0 is taken as 0.
BatchGradient batch_gradient(const Mat& a, const Mat& b, const Mat& xs, const Mat& ys,
                             const std::vector<Index>& batch);

/// Mean per-sample loss over all samples.
double mean_loss(const Mat& a, const Mat& b, const Mat& xs, const Mat& ys);

/// Mini-batch SGD on the squared output loss, reshuffling every epoch.
SgdResult sgd_train(const SampleSet& samples, const SgdConfig& cfg);

}  // namespace resunit
