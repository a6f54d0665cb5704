#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "resunit/baselines.hpp"
#include "resunit/eval.hpp"
#include "resunit/grid.hpp"
#include "resunit/layer1.hpp"
#include "resunit/layer2.hpp"
#include "resunit/model.hpp"
#include "resunit/solver.hpp"

namespace resunit {

using Json = nlohmann::ordered_json;

/// Matrices serialize as arrays of rows; vectors as flat arrays.
Json to_json(const Mat& m);
Json to_json(const Vec& v);
Mat mat_from_json(const Json& j);
Vec vec_from_json(const Json& j);

std::string_view to_string(InputDistribution::Kind kind);
/// "mixture", "gaussian" or "folded-gaussian".
InputDistribution::Kind parse_input_kind(std::string_view text);

Json to_json(const ResidualUnit& unit);
ResidualUnit unit_from_json(const Json& j);

Json to_json(const SolverConfig& cfg);
SolverConfig solver_config_from_json(const Json& j, SolverConfig base = {});
Json to_json(const RescaleConfig& cfg);
RescaleConfig rescale_config_from_json(const Json& j, RescaleConfig base = {});
Json to_json(const Layer1Config& cfg);
Layer1Config layer1_config_from_json(const Json& j, Layer1Config base = {});
Json to_json(const SgdConfig& cfg);
SgdConfig sgd_config_from_json(const Json& j, SgdConfig base = {});
Json to_json(const LearnConfig& cfg);
LearnConfig learn_config_from_json(const Json& j, LearnConfig base = {});
Json to_json(const TeacherConfig& cfg);
TeacherConfig teacher_config_from_json(const Json& j, TeacherConfig base = {});
Json to_json(const TrialGrid& grid);
TrialGrid grid_from_json(const Json& j, TrialGrid base = {});

Json to_json(const SolveReport& rep);
Json to_json(const Layer2Estimate& est);
Json to_json(const Layer1Estimate& est);
Json to_json(const ErrorReport& rep);
Json to_json(const Cell& cell);
Json to_json(const TrialRow& row);
TrialRow trial_row_from_json(const Json& j);
Json to_json(const AggregateRow& row);

/// Debug dumps of assembled programs (dims, dense arrays, bounds).
Json to_json(const QpProblem& p);
Json to_json(const LpProblem& p);
QpProblem qp_from_json(const Json& j);
LpProblem lp_from_json(const Json& j);

/// Dataset CSV: header `# d=..,m=..,n=..,sigma=..,seed=..`, then one row
/// per sample, x_1..x_d then y_1..y_m, at 17 significant digits.
std::string dataset_csv(const SampleSet& s);
SampleSet parse_dataset_csv(const std::string& text);
Json dataset_meta(const SampleSet& s);

/// Trial rows without their wall-clock time, so reruns produce identical files.
std::string trial_csv_header();
std::string trial_csv_line(const TrialRow& row);
std::string aggregate_csv_header();
std::string aggregate_csv_line(const AggregateRow& row);
std::string loss_trace_csv(const std::vector<EpochLoss>& trace);

std::string read_text(const std::filesystem::path& path);
/// Writes through a temporary sibling file and renames it into place.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);
Json read_json(const std::filesystem::path& path);

/// Decimal text of a double at 17 significant digits.
std::string format_double(double v);

}  // namespace resunit
