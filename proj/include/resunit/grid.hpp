#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "resunit/eval.hpp"
#include "resunit/model.hpp"

namespace resunit {

struct TeacherConfig {
  double layer1_mean = 0.0;
  double layer1_std = 1.0;
  double layer2_mean = 0.0;
  double layer2_std = 1.0;
  Index extra_outputs = 0;  ///< m = d + extra_outputs
  bool require_non_scale = true;
};

struct TrialGrid {
  std::vector<Index> dims;
  std::vector<Index> sample_sizes;
  std::vector<double> noise_sigmas{0.0};
  std::vector<Method> methods;
  Index teachers = 1;         ///< teacher units per dimension
  Index trials_per_cell = 4;  ///< training sets per teacher
  Index test_set_size = 1000;
  std::uint64_t base_seed = 0;
  InputDistribution::Kind input_kind = InputDistribution::Kind::GaussUniformMixture;
  double input_mean = 0.0;  ///< Gaussian inputs only
  double input_std = 1.0;   ///< Gaussian inputs only
  TeacherConfig teacher;
  LearnConfig learn;
};

/// Throws Error{InvalidArgument} when a list is empty or a count is zero.
void validate(const TrialGrid& grid);

struct Cell {
  Index d = 0;
  Index n = 0;
  double sigma = 0.0;
  Method method = Method::LP;
};

struct TrialRow {
  Cell cell;
  Index teacher = 0;
  Index trial = 0;
  std::uint64_t teacher_seed = 0;
  std::uint64_t data_seed = 0;
  std::uint64_t test_seed = 0;
  bool ok = true;        ///< false when the learner raised an error
  bool success = true;   ///< false when vanilla LR could not solve
  std::string status = "ok";
  std::string message;
  double layer1_rel = 0.0;
  double layer2_rel = 0.0;
  double output_rel = 0.0;
  double seconds = 0.0;
};

struct Summary {
  double mean = 0.0;
  double std = 0.0;  ///< sample standard deviation; 0 for a single value
  double median = 0.0;
};

struct AggregateRow {
  Cell cell;
  Index trials = 0;
  Index failures = 0;   ///< trials that raised an error
  Index successes = 0;  ///< trials with usable estimates
  double success_rate = 0.0;
  Summary layer1;
  Summary layer2;
  Summary output;
};

struct GridResult {
  std::vector<TrialRow> trials;
  std::vector<AggregateRow> aggregates;
};

/// Cells in dims x sample_sizes x noise_sigmas x methods order.
std::vector<Cell> enumerate_cells(const TrialGrid& grid);

/// Seeds. Teachers and test sets depend on (d, teacher) only and training
/// sets on (d, n, teacher, trial), so every sigma and method sees the same
/// teacher, inputs and noise draws.
std::uint64_t teacher_seed(const TrialGrid& grid, Index d, Index teacher);
std::uint64_t data_seed(const TrialGrid& grid, Index d, Index n, Index teacher, Index trial);
std::uint64_t test_seed(const TrialGrid& grid, Index d, Index teacher);

ResidualUnit grid_teacher(const TrialGrid& grid, Index d, Index teacher);
InputDistribution grid_inputs(const TrialGrid& grid, Index d);

/// Runs one trial. Learner errors are recorded in the row, not thrown.
TrialRow run_trial(const TrialGrid& grid, const Cell& cell, Index teacher, Index trial);

AggregateRow aggregate(const Cell& cell, const std::vector<TrialRow>& rows);

struct GridHooks {
  /// Previously computed rows for a cell, if any; such cells are not rerun.
  std::function<std::optional<std::vector<TrialRow>>(const Cell&)> lookup;
  /// Called once per freshly computed cell, serialized across workers.
  std::function<void(const Cell&, const std::vector<TrialRow>&)> on_cell_done;
};

/// Runs every trial of every cell on `jobs` worker threads. Results are in
/// cell order, then teacher, then trial, regardless of completion order.
GridResult run_grid(const TrialGrid& grid, int jobs = 1, const GridHooks& hooks = {});

}  // namespace resunit
