#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "resunit/baselines.hpp"
#include "resunit/layer1.hpp"
#include "resunit/layer2.hpp"
#include "resunit/model.hpp"

namespace resunit {

/// Every learner the harness can run.
enum class Method { QP, LP, SlackLP, Sgd, VanillaLr };

std::string_view to_string(Method method);
Method parse_method(std::string_view text);

struct ErrorReport {
  double layer1_rel = 0.0;  ///< |A - A*|_F / |A*|_F
  double layer2_rel = 0.0;  ///< |B - B*|_F / |B*|_F
  double output_rel = 0.0;  ///< mean over test samples of |y_hat - y| / |y|
  Index n = 0;              ///< training sample count
  Index d = 0;
  std::uint64_t seed = 0;
  std::string method;
};

/// Weight errors against `unit` and output error on the held-out `test` set.
/// n, seed and method are left for the caller to fill in.
ErrorReport relative_errors(const Mat& est_a, const Mat& est_b, const ResidualUnit& unit,
                            const SampleSet& test);

struct PipelineConfig {
  Layer2Config layer2;
  Layer1Config layer1;
};

struct PipelineResult {
  Layer2Estimate layer2;
  Layer1Estimate layer1;
  std::vector<std::string> diagnostics;  ///< warnings from both stages, prefixed by stage
};

/// Learns layer 2, then feeds its unclipped hidden estimates to layer 1. The
/// method must be QP, LP or SlackLP and is used for both layers. Stage
/// errors are rethrown with the stage name prepended.
PipelineResult full_pipeline(const SampleSet& samples, Method method, const PipelineConfig& cfg = {});

struct LearnConfig {
  PipelineConfig pipeline;
  SgdConfig sgd;
};

/// Result of any learner. `success` is false only for vanilla LR when its
/// orthant systems are rank deficient.
struct LearnedUnit {
  Mat a;
  Mat b;
  bool success = true;
  std::vector<std::string> diagnostics;
};

LearnedUnit learn(const SampleSet& samples, Method method, const LearnConfig& cfg = {});

}  // namespace resunit
