#include "resunit/grid.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

#include "resunit/error.hpp"
#include "resunit/rng.hpp"

namespace resunit {

namespace {

enum SeedTag : std::uint64_t { kTeacher = 1, kData = 2, kTest = 3, kLearner = 4 };

std::uint64_t u64(Index v) { return static_cast<std::uint64_t>(v); }

Summary summarize(std::vector<double> values) {
  Summary s;
  if (values.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan, nan};
  }
  const double cnt = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / cnt;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / (cnt - 1.0));
  }
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  s.median = values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
  return s;
}

}  // namespace

void validate(const TrialGrid& grid) {
  if (grid.dims.empty() || grid.sample_sizes.empty() || grid.noise_sigmas.empty() || grid.methods.empty()) {
    throw Error(ErrorKind::InvalidArgument, "grid lists must be non-empty");
  }
  if (grid.teachers < 1 || grid.trials_per_cell < 1 || grid.test_set_size < 1) {
    throw Error(ErrorKind::InvalidArgument, "teachers, trials and test size must be positive");
  }
  for (Index d : grid.dims) {
    if (d < 1) throw Error(ErrorKind::InvalidArgument, "dimensions must be positive");
  }
  for (Index n : grid.sample_sizes) {
    if (n < 1) throw Error(ErrorKind::InvalidArgument, "sample sizes must be positive");
  }
  for (double s : grid.noise_sigmas) {
    if (!(s >= 0.0)) throw Error(ErrorKind::InvalidArgument, "noise sigmas must be nonnegative");
  }
}

std::vector<Cell> enumerate_cells(const TrialGrid& grid) {
  std::vector<Cell> cells;
  for (Index d : grid.dims) {
    for (Index n : grid.sample_sizes) {
      for (double s : grid.noise_sigmas) {
        for (Method m : grid.methods) cells.push_back({d, n, s, m});
      }
    }
  }
  return cells;
}

std::uint64_t teacher_seed(const TrialGrid& grid, Index d, Index teacher) {
  return derive_seed(grid.base_seed, {kTeacher, u64(d), u64(teacher)});
}

std::uint64_t data_seed(const TrialGrid& grid, Index d, Index n, Index teacher, Index trial) {
  return derive_seed(grid.base_seed, {kData, u64(d), u64(n), u64(teacher), u64(trial)});
}

std::uint64_t test_seed(const TrialGrid& grid, Index d, Index teacher) {
  return derive_seed(grid.base_seed, {kTest, u64(d), u64(teacher)});
}

ResidualUnit grid_teacher(const TrialGrid& grid, Index d, Index teacher) {
  NetworkGenSpec spec;
  spec.d = d;
  spec.m = d + grid.teacher.extra_outputs;
  spec.layer1_mean = grid.teacher.layer1_mean;
  spec.layer1_std = grid.teacher.layer1_std;
  spec.layer2_mean = grid.teacher.layer2_mean;
  spec.layer2_std = grid.teacher.layer2_std;
  spec.require_non_scale_transform = grid.teacher.require_non_scale && d > 1;
  spec.seed = teacher_seed(grid, d, teacher);
  return generate_unit(spec);
}

InputDistribution grid_inputs(const TrialGrid& grid, Index d) {
  switch (grid.input_kind) {
    case InputDistribution::Kind::GaussUniformMixture: return InputDistribution::mixture(d);
    case InputDistribution::Kind::GaussianIid: return InputDistribution::gaussian(d, grid.input_mean, grid.input_std);
    case InputDistribution::Kind::FoldedGaussianIid: {
      InputDistribution dist = InputDistribution::gaussian(d, grid.input_mean, grid.input_std);
      dist.kind = InputDistribution::Kind::FoldedGaussianIid;
      return dist;
    }
  }
  return InputDistribution::mixture(d);
}

TrialRow run_trial(const TrialGrid& grid, const Cell& cell, Index teacher, Index trial) {
  TrialRow row;
  row.cell = cell;
  row.teacher = teacher;
  row.trial = trial;
  row.teacher_seed = teacher_seed(grid, cell.d, teacher);
  row.data_seed = data_seed(grid, cell.d, cell.n, teacher, trial);
  row.test_seed = test_seed(grid, cell.d, teacher);
  const auto start = std::chrono::steady_clock::now();
  try {
    const ResidualUnit unit = grid_teacher(grid, cell.d, teacher);
    const InputDistribution dist = grid_inputs(grid, cell.d);
    const SampleSet train = sample(unit, dist, cell.n, cell.sigma, row.data_seed);
    const SampleSet test = sample(unit, dist, grid.test_set_size, 0.0, row.test_seed);
    LearnConfig cfg = grid.learn;
    cfg.sgd.seed = derive_seed(row.data_seed, {kLearner, static_cast<std::uint64_t>(cell.method)});
    const LearnedUnit learned = learn(train, cell.method, cfg);
    if (!learned.diagnostics.empty()) row.message = learned.diagnostics.front();
    row.success = learned.success;
    if (learned.success) {
      const ErrorReport rep = relative_errors(learned.a, learned.b, unit, test);
      row.layer1_rel = rep.layer1_rel;
      row.layer2_rel = rep.layer2_rel;
      row.output_rel = rep.output_rel;
    } else {
      row.status = "unsolved";
      row.layer1_rel = row.layer2_rel = row.output_rel = std::numeric_limits<double>::quiet_NaN();
    }
  } catch (const Error& e) {
    row.ok = false;
    row.success = false;
    row.status = std::string(to_string(e.kind()));
    row.message = e.what();
    row.layer1_rel = row.layer2_rel = row.output_rel = std::numeric_limits<double>::quiet_NaN();
  }
  row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return row;
}

AggregateRow aggregate(const Cell& cell, const std::vector<TrialRow>& rows) {
  AggregateRow agg;
  agg.cell = cell;
  agg.trials = static_cast<Index>(rows.size());
  std::vector<double> l1, l2, out;
  for (const TrialRow& r : rows) {
    if (!r.ok) ++agg.failures;
    if (!r.ok || !r.success) continue;
    ++agg.successes;
    l1.push_back(r.layer1_rel);
    l2.push_back(r.layer2_rel);
    out.push_back(r.output_rel);
  }
  agg.success_rate = agg.trials ? static_cast<double>(agg.successes) / static_cast<double>(agg.trials) : 0.0;
  agg.layer1 = summarize(l1);
  agg.layer2 = summarize(l2);
  agg.output = summarize(out);
  return agg;
}

GridResult run_grid(const TrialGrid& grid, int jobs, const GridHooks& hooks) {
  validate(grid);
  const std::vector<Cell> cells = enumerate_cells(grid);
  const Index per_cell = grid.teachers * grid.trials_per_cell;
  std::vector<std::vector<TrialRow>> rows(cells.size());

  struct Task {
    std::size_t cell;
    Index teacher;
    Index trial;
  };
  std::vector<Task> tasks;
  std::vector<Index> remaining(cells.size(), 0);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (hooks.lookup) {
      if (auto cached = hooks.lookup(cells[c])) {
        rows[c] = std::move(*cached);
        continue;
      }
    }
    rows[c].resize(static_cast<std::size_t>(per_cell));
    remaining[c] = per_cell;
    for (Index t = 0; t < grid.teachers; ++t) {
      for (Index r = 0; r < grid.trials_per_cell; ++r) tasks.push_back({c, t, r});
    }
  }

  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= tasks.size()) return;
      const Task& task = tasks[k];
      try {
        TrialRow row = run_trial(grid, cells[task.cell], task.teacher, task.trial);
        std::lock_guard<std::mutex> lock(mu);
        rows[task.cell][static_cast<std::size_t>(task.teacher * grid.trials_per_cell + task.trial)] = std::move(row);
        if (--remaining[task.cell] == 0 && hooks.on_cell_done) hooks.on_cell_done(cells[task.cell], rows[task.cell]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
        next.store(tasks.size());
        return;
      }
    }
  };
  const int n_workers = std::max(1, std::min<int>(jobs, static_cast<int>(std::max<std::size_t>(tasks.size(), 1))));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  GridResult out;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    out.aggregates.push_back(aggregate(cells[c], rows[c]));
    for (auto& r : rows[c]) out.trials.push_back(std::move(r));
  }
  return out;
}

}  // namespace resunit
