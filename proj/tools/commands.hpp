#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <stdexcept>
#include <vector>

#include "resunit/error.hpp"
#include "resunit/io.hpp"

namespace resunit::cli {

using resunit::to_json;
using resunit::to_string;

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kIoError = 3,
  kSolverError = 4,
  kEvaluationError = 5,
};

/// Failure carrying its exit code. `kind` is the library error kind when
/// there is one.
class CliError : public std::runtime_error {
 public:
  CliError(int code, std::string kind, const std::string& message)
      : std::runtime_error(message), code_(code), kind_(std::move(kind)) {}
  int code() const { return code_; }
  const std::string& kind() const { return kind_; }

 private:
  int code_;
  std::string kind_;
};

/// Exit code for a library error raised outside the evaluation stage.
int exit_code_for(ErrorKind kind);

/// Machine-readable description of a failure, printed to stderr.
Json error_json(int code, const std::string& kind, const std::string& message);

struct GenerateConfig {
  Index d = 2;
  Index m = 2;
  Index n = 200;
  std::uint64_t seed = 0;
  double noise_sigma = 0.0;
  InputDistribution::Kind input_kind = InputDistribution::Kind::GaussUniformMixture;
  double input_mean = 0.0;
  double input_std = 1.0;
  TeacherConfig teacher;
  std::string out = "data";
};

Json to_json(const GenerateConfig& cfg);
GenerateConfig generate_config_from_json(const Json& j, GenerateConfig base = {});

struct LearnRunConfig {
  std::string data;                    ///< dataset CSV or a directory holding samples.csv
  std::optional<std::string> teacher;  ///< teacher JSON written by `generate`
  Method method = Method::LP;
  std::uint64_t seed = 0;              ///< SGD and test-set seeds derive from it
  Index test_size = 1000;
  LearnConfig learn;
  std::string out = "estimate";
};

Json to_json(const LearnRunConfig& cfg);
LearnRunConfig learn_run_config_from_json(const Json& j, LearnRunConfig base = {});

struct EvaluateConfig {
  std::string estimate;
  std::string teacher;
  std::uint64_t seed = 0;
  Index test_size = 1000;
  std::string out = "report.json";
};

Json to_json(const EvaluateConfig& cfg);
EvaluateConfig evaluate_config_from_json(const Json& j, EvaluateConfig base = {});

enum class Experiment { Heatmap, WeightRobustness, NoiseRobustness, VanillaLrRates };

std::string_view to_string(Experiment e);
Experiment parse_experiment(std::string_view text);

/// The default grid of each study.
TrialGrid experiment_preset(Experiment e);

struct ExperimentConfig {
  Experiment experiment = Experiment::Heatmap;
  TrialGrid grid;
  std::string out = "experiment";
};

Json to_json(const ExperimentConfig& cfg);
ExperimentConfig experiment_config_from_json(const Json& j, ExperimentConfig base);

/// Stable 64-bit FNV-1a hash of `text`, as 16 hex digits.
std::string content_hash(const std::string& text);

/// Everything a cell's results depend on: the grid without its lists, plus
/// the cell itself.
Json cell_key(const TrialGrid& grid, const Cell& cell);

/// Commands. Each returns the summary printed to stdout and writes its
/// artifacts only after all computation has succeeded.
Json cmd_generate(const GenerateConfig& cfg);
Json cmd_learn(const LearnRunConfig& cfg);
Json cmd_evaluate(const EvaluateConfig& cfg);
Json cmd_experiment(const ExperimentConfig& cfg, int jobs);

}  // namespace resunit::cli
