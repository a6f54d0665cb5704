#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "resunit/error.hpp"
#include "resunit/rng.hpp"

namespace resunit::cli {

namespace fs = std::filesystem;

namespace {

enum SeedTag : std::uint64_t { kTeacherTag = 1, kDataTag = 2, kTestTag = 3, kLearnerTag = 4 };

Json number_json(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& context) {
  if (!j.is_object()) throw Error(ErrorKind::Parse, context + ": expected a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!ok.count(it.key())) throw Error(ErrorKind::Parse, context + ": unknown key '" + it.key() + "'");
  }
}

template <typename T>
void read_field(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("field '") + key + "': " + e.what());
  }
}

void require_positive(Index v, const char* name) {
  if (v < 1) throw Error(ErrorKind::InvalidArgument, std::string(name) + " must be positive");
}

InputDistribution make_inputs(InputDistribution::Kind kind, Index d, double mean, double std) {
  TrialGrid g;
  g.input_kind = kind;
  g.input_mean = mean;
  g.input_std = std;
  return grid_inputs(g, d);
}

Json input_json(InputDistribution::Kind kind, double mean, double std) {
  return Json{{"kind", std::string(to_string(kind))}, {"mean", mean}, {"std", std}};
}

/// Files written together: every temporary is written before any is
/// renamed into place, and temporaries are removed on failure.
class OutputSet {
 public:
  void add(fs::path path, std::string content) { files_.emplace_back(std::move(path), std::move(content)); }

  void commit() {
    std::vector<fs::path> temps;
    try {
      for (const auto& [path, content] : files_) {
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        fs::path tmp = path;
        tmp += ".tmp";
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
        temps.push_back(tmp);
        out << content;
        out.close();
        if (!out) throw Error(ErrorKind::Io, "failed writing " + tmp.string());
      }
      for (std::size_t i = 0; i < files_.size(); ++i) fs::rename(temps[i], files_[i].first);
    } catch (const fs::filesystem_error& e) {
      cleanup(temps);
      throw Error(ErrorKind::Io, e.what());
    } catch (...) {
      cleanup(temps);
      throw;
    }
  }

 private:
  static void cleanup(const std::vector<fs::path>& temps) {
    std::error_code ec;
    for (const fs::path& t : temps) fs::remove(t, ec);
  }

  std::vector<std::pair<fs::path, std::string>> files_;
};

struct LoadedTeacher {
  ResidualUnit unit;
  InputDistribution::Kind input_kind = InputDistribution::Kind::GaussUniformMixture;
  double input_mean = 0.0;
  double input_std = 1.0;
};

/// Runs `fn`, turning library errors into CLI errors with `code`.
template <typename Fn>
auto stage(int code, const std::string& what, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    const int mapped = code == kSolverError && e.kind() == ErrorKind::InvalidArgument ? kConfigError : code;
    throw CliError(mapped, std::string(to_string(e.kind())), what + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw CliError(code, "Parse", what + ": " + e.what());
  }
}

LoadedTeacher load_teacher(const std::string& path) {
  return stage(kIoError, "teacher " + path, [&] {
    if (!fs::exists(path)) throw Error(ErrorKind::Io, "file not found");
    const Json j = read_json(path);
    if (!j.contains("unit")) throw Error(ErrorKind::Parse, "missing field 'unit'");
    LoadedTeacher t;
    t.unit = unit_from_json(j.at("unit"));
    if (j.contains("input")) {
      const Json& in = j.at("input");
      t.input_kind = parse_input_kind(in.at("kind").get<std::string>());
      t.input_mean = in.at("mean").get<double>();
      t.input_std = in.at("std").get<double>();
    }
    return t;
  });
}

SampleSet load_dataset(const std::string& path) {
  return stage(kIoError, "dataset " + path, [&] {
    fs::path p = path;
    if (fs::is_directory(p)) p /= "samples.csv";
    if (!fs::exists(p)) throw Error(ErrorKind::Io, "file not found");
    return parse_dataset_csv(read_text(p));
  });
}

ErrorReport evaluate_estimate(const Mat& a_hat, const Mat& b_hat, const LoadedTeacher& teacher,
                              std::uint64_t seed, Index test_size, Index n, const std::string& method) {
  return stage(kEvaluationError, "evaluation", [&] {
    if (a_hat.rows() != teacher.unit.d() || b_hat.rows() != teacher.unit.m() || b_hat.cols() != teacher.unit.d()) {
      throw Error(ErrorKind::DimensionMismatch, "estimate shape does not match the teacher");
    }
    const InputDistribution dist = make_inputs(teacher.input_kind, teacher.unit.d(), teacher.input_mean,
                                               teacher.input_std);
    const SampleSet test = sample(teacher.unit, dist, test_size, 0.0, derive_seed(seed, {kTestTag}));
    ErrorReport rep = relative_errors(a_hat, b_hat, teacher.unit, test);
    rep.n = n;
    rep.d = teacher.unit.d();
    rep.seed = seed;
    rep.method = method;
    return rep;
  });
}

Json report_json(const Json& config, const ErrorReport& rep, const std::string& teacher, Index test_size) {
  Json j = to_json(rep);
  j["kind"] = "resunit-report";
  j["teacher"] = teacher;
  j["test_size"] = test_size;
  j["config"] = config;
  return j;
}

}  // namespace

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::Parse: return kConfigError;
    case ErrorKind::Io: return kIoError;
    default: return kSolverError;
  }
}

Json error_json(int code, const std::string& kind, const std::string& message) {
  return Json{{"error", Json{{"exit_code", code}, {"kind", kind}, {"message", message}}}};
}

// ---------------------------------------------------------------- generate

Json to_json(const GenerateConfig& c) {
  return Json{{"d", c.d},
              {"m", c.m},
              {"n", c.n},
              {"seed", c.seed},
              {"noise_sigma", c.noise_sigma},
              {"input", input_json(c.input_kind, c.input_mean, c.input_std)},
              {"teacher", to_json(c.teacher)},
              {"out", c.out}};
}

GenerateConfig generate_config_from_json(const Json& j, GenerateConfig c) {
  check_keys(j, {"d", "m", "n", "seed", "noise_sigma", "input", "teacher", "out"}, "generate config");
  read_field(j, "d", c.d);
  read_field(j, "m", c.m);
  read_field(j, "n", c.n);
  read_field(j, "seed", c.seed);
  read_field(j, "noise_sigma", c.noise_sigma);
  if (j.contains("input")) {
    const Json& in = j.at("input");
    check_keys(in, {"kind", "mean", "std"}, "input");
    if (in.contains("kind")) c.input_kind = parse_input_kind(in.at("kind").get<std::string>());
    read_field(in, "mean", c.input_mean);
    read_field(in, "std", c.input_std);
  }
  if (j.contains("teacher")) c.teacher = teacher_config_from_json(j.at("teacher"), c.teacher);
  read_field(j, "out", c.out);
  return c;
}

Json cmd_generate(const GenerateConfig& cfg) {
  stage(kConfigError, "config", [&] {
    require_positive(cfg.d, "d");
    require_positive(cfg.n, "n");
    if (cfg.m < cfg.d) throw Error(ErrorKind::InvalidArgument, "m must be at least d");
    if (!(cfg.noise_sigma >= 0.0)) throw Error(ErrorKind::InvalidArgument, "noise_sigma must be nonnegative");
    if (!(cfg.input_std > 0.0)) throw Error(ErrorKind::InvalidArgument, "input std must be positive");
    return 0;
  });
  const std::uint64_t teacher_seed = derive_seed(cfg.seed, {kTeacherTag});
  const std::uint64_t data_seed = derive_seed(cfg.seed, {kDataTag});
  const auto [unit, samples] = stage(kSolverError, "generate", [&] {
    NetworkGenSpec spec;
    spec.d = cfg.d;
    spec.m = cfg.m;
    spec.layer1_mean = cfg.teacher.layer1_mean;
    spec.layer1_std = cfg.teacher.layer1_std;
    spec.layer2_mean = cfg.teacher.layer2_mean;
    spec.layer2_std = cfg.teacher.layer2_std;
    spec.require_non_scale_transform = cfg.teacher.require_non_scale && cfg.d > 1;
    spec.seed = teacher_seed;
    ResidualUnit u = generate_unit(spec);
    const InputDistribution dist = make_inputs(cfg.input_kind, cfg.d, cfg.input_mean, cfg.input_std);
    SampleSet s = sample(u, dist, cfg.n, cfg.noise_sigma, data_seed);
    return std::pair{std::move(u), std::move(s)};
  });

  const fs::path out = cfg.out;
  Json teacher{{"kind", "resunit-teacher"},
               {"config", to_json(cfg)},
               {"teacher_seed", teacher_seed},
               {"data_seed", data_seed},
               {"input", input_json(cfg.input_kind, cfg.input_mean, cfg.input_std)},
               {"non_scale", !has_scale_transformation(unit.a)},
               {"unit", to_json(unit)}};
  Json meta = dataset_meta(samples);
  meta["config"] = to_json(cfg);

  OutputSet files;
  files.add(out / "teacher.json", teacher.dump(2) + "\n");
  files.add(out / "samples.csv", dataset_csv(samples));
  files.add(out / "samples.meta.json", meta.dump(2) + "\n");
  stage(kIoError, "write", [&] {
    files.commit();
    return 0;
  });

  return Json{{"command", "generate"},
              {"d", cfg.d},
              {"m", cfg.m},
              {"n", cfg.n},
              {"noise_sigma", cfg.noise_sigma},
              {"teacher_seed", teacher_seed},
              {"data_seed", data_seed},
              {"files", Json{{"teacher", (out / "teacher.json").string()},
                             {"samples", (out / "samples.csv").string()},
                             {"meta", (out / "samples.meta.json").string()}}}};
}

// ---------------------------------------------------------------- learn

Json to_json(const LearnRunConfig& c) {
  return Json{{"data", c.data},
              {"teacher", c.teacher ? Json(*c.teacher) : Json(nullptr)},
              {"method", std::string(to_string(c.method))},
              {"seed", c.seed},
              {"test_size", c.test_size},
              {"learn", to_json(c.learn)},
              {"out", c.out}};
}

LearnRunConfig learn_run_config_from_json(const Json& j, LearnRunConfig c) {
  check_keys(j, {"data", "teacher", "method", "seed", "test_size", "learn", "out"}, "learn config");
  read_field(j, "data", c.data);
  if (j.contains("teacher")) {
    if (j.at("teacher").is_null()) {
      c.teacher.reset();
    } else {
      std::string t;
      read_field(j, "teacher", t);
      c.teacher = t;
    }
  }
  if (j.contains("method")) c.method = parse_method(j.at("method").get<std::string>());
  read_field(j, "seed", c.seed);
  read_field(j, "test_size", c.test_size);
  if (j.contains("learn")) c.learn = learn_config_from_json(j.at("learn"), c.learn);
  read_field(j, "out", c.out);
  return c;
}

Json cmd_learn(const LearnRunConfig& cfg) {
  stage(kConfigError, "config", [&] {
    if (cfg.data.empty()) throw Error(ErrorKind::InvalidArgument, "no dataset given");
    require_positive(cfg.test_size, "test_size");
    return 0;
  });
  const SampleSet samples = load_dataset(cfg.data);
  std::optional<LoadedTeacher> teacher;
  if (cfg.teacher) {
    teacher = load_teacher(*cfg.teacher);
    if (teacher->unit.d() != samples.d() || teacher->unit.m() != samples.m()) {
      throw CliError(kConfigError, "DimensionMismatch", "teacher and dataset dimensions differ");
    }
  }

  const std::string method(to_string(cfg.method));
  Json estimate{{"kind", "resunit-estimate"},
                {"config", to_json(cfg)},
                {"dataset", dataset_meta(samples)},
                {"method", method},
                {"d", samples.d()},
                {"m", samples.m()},
                {"n", samples.n()}};
  Json summary{{"command", "learn"}, {"method", method}, {"d", samples.d()}, {"m", samples.m()}, {"n", samples.n()}};
  Mat a_hat, b_hat;
  std::vector<std::string> diagnostics;
  std::optional<std::string> loss_trace;

  stage(kSolverError, method, [&] {
    switch (cfg.method) {
      case Method::QP:
      case Method::LP:
      case Method::SlackLP: {
        const PipelineResult res = full_pipeline(samples, cfg.method, cfg.learn.pipeline);
        a_hat = res.layer1.a_hat;
        b_hat = res.layer2.b_hat;
        diagnostics = res.diagnostics;
        const Json objectives{{"layer2", number_json(res.layer2.objective)},
                              {"layer1", number_json(res.layer1.objective)}};
        estimate["objectives"] = objectives;
        estimate["layer2"] = to_json(res.layer2);
        estimate["layer1"] = to_json(res.layer1);
        summary["objectives"] = objectives;
        break;
      }
      case Method::Sgd: {
        SgdConfig sgd = cfg.learn.sgd;
        sgd.seed = derive_seed(cfg.seed, {kLearnerTag});
        const SgdResult res = sgd_train(samples, sgd);
        a_hat = res.a_hat;
        b_hat = res.b_hat;
        if (res.diverged) diagnostics.push_back("sgd: loss diverged");
        const double final_loss = res.trace.empty() ? res.initial_loss : res.trace.back().mean_loss;
        estimate["sgd"] = Json{{"seed", sgd.seed},
                               {"initial_loss", number_json(res.initial_loss)},
                               {"final_loss", number_json(final_loss)},
                               {"epochs", res.trace.size()},
                               {"diverged", res.diverged}};
        summary["final_loss"] = number_json(final_loss);
        loss_trace = loss_trace_csv(res.trace);
        break;
      }
      case Method::VanillaLr: {
        const VanillaLrResult res = vanilla_lr(samples);
        if (!res.success) {
          throw Error(ErrorKind::RankDeficient, "orthant systems rank deficient (" + std::to_string(res.n_neg_used) +
                                                    " negative, " + std::to_string(res.n_pos_used) +
                                                    " positive samples)");
        }
        a_hat = *res.a_hat;
        b_hat = *res.b_hat;
        estimate["vanilla_lr"] = Json{{"n_neg_used", res.n_neg_used}, {"n_pos_used", res.n_pos_used}};
        break;
      }
    }
    return 0;
  });
  estimate["a_hat"] = to_json(a_hat);
  estimate["b_hat"] = to_json(b_hat);
  estimate["diagnostics"] = diagnostics;
  summary["diagnostics"] = diagnostics;

  const fs::path out = cfg.out;
  OutputSet files;
  files.add(out / "estimate.json", estimate.dump(2) + "\n");
  if (loss_trace) files.add(out / "loss_trace.csv", *loss_trace);
  Json paths{{"estimate", (out / "estimate.json").string()}};
  if (teacher) {
    const ErrorReport rep = evaluate_estimate(a_hat, b_hat, *teacher, cfg.seed, cfg.test_size, samples.n(), method);
    files.add(out / "report.json", report_json(to_json(cfg), rep, *cfg.teacher, cfg.test_size).dump(2) + "\n");
    paths["report"] = (out / "report.json").string();
    summary["errors"] = to_json(rep);
  }
  if (loss_trace) paths["loss_trace"] = (out / "loss_trace.csv").string();
  stage(kIoError, "write", [&] {
    files.commit();
    return 0;
  });
  summary["files"] = paths;
  return summary;
}

// ---------------------------------------------------------------- evaluate

Json to_json(const EvaluateConfig& c) {
  return Json{{"estimate", c.estimate}, {"teacher", c.teacher}, {"seed", c.seed}, {"test_size", c.test_size},
              {"out", c.out}};
}

EvaluateConfig evaluate_config_from_json(const Json& j, EvaluateConfig c) {
  check_keys(j, {"estimate", "teacher", "seed", "test_size", "out"}, "evaluate config");
  read_field(j, "estimate", c.estimate);
  read_field(j, "teacher", c.teacher);
  read_field(j, "seed", c.seed);
  read_field(j, "test_size", c.test_size);
  read_field(j, "out", c.out);
  return c;
}

Json cmd_evaluate(const EvaluateConfig& cfg) {
  stage(kConfigError, "config", [&] {
    if (cfg.estimate.empty() || cfg.teacher.empty()) {
      throw Error(ErrorKind::InvalidArgument, "both an estimate and a teacher are required");
    }
    require_positive(cfg.test_size, "test_size");
    return 0;
  });
  struct Loaded {
    Mat a, b;
    Index n = 0;
    std::string method;
  };
  const Loaded est = stage(kIoError, "estimate " + cfg.estimate, [&] {
    fs::path p = cfg.estimate;
    if (fs::is_directory(p)) p /= "estimate.json";
    if (!fs::exists(p)) throw Error(ErrorKind::Io, "file not found");
    const Json j = read_json(p);
    Loaded l;
    l.a = mat_from_json(j.at("a_hat"));
    l.b = mat_from_json(j.at("b_hat"));
    l.n = j.value("n", Index{0});
    l.method = j.value("method", std::string());
    return l;
  });
  const LoadedTeacher teacher = load_teacher(cfg.teacher);
  const ErrorReport rep = evaluate_estimate(est.a, est.b, teacher, cfg.seed, cfg.test_size, est.n, est.method);
  OutputSet files;
  files.add(cfg.out, report_json(to_json(cfg), rep, cfg.teacher, cfg.test_size).dump(2) + "\n");
  stage(kIoError, "write", [&] {
    files.commit();
    return 0;
  });
  return Json{{"command", "evaluate"}, {"errors", to_json(rep)}, {"files", Json{{"report", cfg.out}}}};
}

// ---------------------------------------------------------------- experiment

std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::Heatmap: return "heatmap";
    case Experiment::WeightRobustness: return "weight_robustness";
    case Experiment::NoiseRobustness: return "noise_robustness";
    case Experiment::VanillaLrRates: return "vanilla_lr_rates";
  }
  return "heatmap";
}

Experiment parse_experiment(std::string_view text) {
  for (Experiment e : {Experiment::Heatmap, Experiment::WeightRobustness, Experiment::NoiseRobustness,
                       Experiment::VanillaLrRates}) {
    if (text == to_string(e)) return e;
  }
  throw Error(ErrorKind::InvalidArgument,
              "unknown experiment '" + std::string(text) +
                  "' (expected heatmap, weight_robustness, noise_robustness or vanilla_lr_rates)");
}

TrialGrid experiment_preset(Experiment e) {
  TrialGrid g;
  switch (e) {
    case Experiment::Heatmap:
      g.dims = {2, 4, 6, 8, 10, 12, 14, 16};
      g.sample_sizes = {32, 64, 128, 256, 512, 1024};
      g.methods = {Method::LP, Method::Sgd};
      g.teachers = 4;
      g.trials_per_cell = 4;
      break;
    case Experiment::WeightRobustness:
      g.dims = {16};
      g.sample_sizes = {512};
      g.methods = {Method::LP, Method::Sgd};
      g.teachers = 128;
      g.trials_per_cell = 4;
      break;
    case Experiment::NoiseRobustness:
      g.dims = {10};
      g.sample_sizes = {512};
      g.noise_sigmas = {0.0, 0.05, 0.1, 0.15, 0.2};
      g.methods = {Method::Sgd, Method::QP, Method::SlackLP};
      g.teachers = 1;
      g.trials_per_cell = 8;
      break;
    case Experiment::VanillaLrRates:
      g.dims = {4, 6, 8};
      g.sample_sizes = {10, 100, 500, 1000, 5000, 10000};
      g.methods = {Method::VanillaLr};
      g.teachers = 1;
      g.trials_per_cell = 300;
      g.input_kind = InputDistribution::Kind::GaussianIid;
      g.input_mean = 0.0;
      g.input_std = 1.0;
      break;
  }
  return g;
}

Json to_json(const ExperimentConfig& c) {
  return Json{{"experiment", std::string(to_string(c.experiment))}, {"grid", to_json(c.grid)}, {"out", c.out}};
}

ExperimentConfig experiment_config_from_json(const Json& j, ExperimentConfig c) {
  check_keys(j, {"experiment", "grid", "out"}, "experiment config");
  if (j.contains("experiment")) c.experiment = parse_experiment(j.at("experiment").get<std::string>());
  if (j.contains("grid")) c.grid = grid_from_json(j.at("grid"), c.grid);
  read_field(j, "out", c.out);
  return c;
}

std::string content_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Json cell_key(const TrialGrid& grid, const Cell& cell) {
  Json g = to_json(grid);
  for (const char* k : {"dims", "sample_sizes", "noise_sigmas", "methods"}) g.erase(k);
  return Json{{"grid", g}, {"cell", to_json(cell)}};
}

Json cmd_experiment(const ExperimentConfig& cfg, int jobs) {
  stage(kConfigError, "config", [&] {
    validate(cfg.grid);
    if (jobs < 1) throw Error(ErrorKind::InvalidArgument, "jobs must be positive");
    return 0;
  });
  const fs::path out = cfg.out;
  const fs::path cells_dir = out / "cells";
  const Json config = to_json(cfg);
  Json hashed = config;
  hashed.erase("out");
  const std::string config_hash = content_hash(hashed.dump());

  Index cached = 0;
  GridHooks hooks;
  hooks.lookup = [&](const Cell& cell) -> std::optional<std::vector<TrialRow>> {
    const Json key = cell_key(cfg.grid, cell);
    const fs::path file = cells_dir / (content_hash(key.dump()) + ".json");
    if (!fs::exists(file)) return std::nullopt;
    try {
      const Json j = read_json(file);
      if (j.at("key") != key) return std::nullopt;
      std::vector<TrialRow> rows;
      for (const Json& r : j.at("rows")) rows.push_back(trial_row_from_json(r));
      if (static_cast<Index>(rows.size()) != cfg.grid.teachers * cfg.grid.trials_per_cell) return std::nullopt;
      ++cached;
      return rows;
    } catch (const std::exception&) {
      return std::nullopt;
    }
  };
  hooks.on_cell_done = [&](const Cell& cell, const std::vector<TrialRow>& rows) {
    const Json key = cell_key(cfg.grid, cell);
    Json list = Json::array();
    for (const TrialRow& r : rows) list.push_back(to_json(r));
    write_text_atomic(cells_dir / (content_hash(key.dump()) + ".json"), Json{{"key", key}, {"rows", list}}.dump() + "\n");
  };

  const auto start = std::chrono::steady_clock::now();
  const GridResult result = [&] {
    try {
      return run_grid(cfg.grid, jobs, hooks);
    } catch (const Error& e) {
      throw CliError(e.kind() == ErrorKind::Io ? kIoError : kEvaluationError, std::string(to_string(e.kind())),
                     std::string("experiment: ") + e.what());
    }
  }();
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const std::string header = "# " + config.dump() + "\n";
  std::string trials = header + trial_csv_header() + "\n";
  for (const TrialRow& r : result.trials) trials += trial_csv_line(r) + "\n";
  std::string aggregates = header + aggregate_csv_header() + "\n";
  Json agg_json = Json::array();
  for (const AggregateRow& a : result.aggregates) {
    aggregates += aggregate_csv_line(a) + "\n";
    agg_json.push_back(to_json(a));
  }

  std::ostringstream timings;
  timings << "d,n,sigma,method,teacher,trial,seconds\n";
  for (const TrialRow& r : result.trials) {
    timings << r.cell.d << "," << r.cell.n << "," << format_double(r.cell.sigma) << "," << to_string(r.cell.method)
            << "," << r.teacher << "," << r.trial << "," << format_double(r.seconds) << "\n";
  }

  OutputSet files;
  files.add(out / "trials.csv", trials);
  files.add(out / "timings.csv", timings.str());
  files.add(out / "aggregates.csv", aggregates);
  Json paths{{"trials", (out / "trials.csv").string()},
             {"aggregates", (out / "aggregates.csv").string()},
             {"timings", (out / "timings.csv").string()}};
  if (cfg.experiment == Experiment::VanillaLrRates) {
    std::map<std::pair<Index, Index>, double> rate;
    for (const AggregateRow& a : result.aggregates) rate[{a.cell.d, a.cell.n}] = a.success_rate;
    std::ostringstream table;
    table << header << "d";
    for (Index n : cfg.grid.sample_sizes) table << "," << n;
    table << "\n";
    for (Index d : cfg.grid.dims) {
      table << d;
      for (Index n : cfg.grid.sample_sizes) table << "," << format_double(rate[{d, n}]);
      table << "\n";
    }
    files.add(out / "success_rates.csv", table.str());
    paths["success_rates"] = (out / "success_rates.csv").string();
  }
  paths["summary"] = (out / "summary.json").string();
  const Json summary{{"kind", "resunit-experiment"},
                     {"experiment", std::string(to_string(cfg.experiment))},
                     {"config", config},
                     {"config_hash", config_hash},
                     {"aggregates", agg_json}};
  files.add(out / "summary.json", summary.dump(2) + "\n");
  stage(kIoError, "write", [&] {
    files.commit();
    return 0;
  });

  return Json{{"command", "experiment"},
              {"experiment", std::string(to_string(cfg.experiment))},
              {"config_hash", config_hash},
              {"cells", result.aggregates.size()},
              {"cached_cells", cached},
              {"trials", result.trials.size()},
              {"seconds", seconds},
              {"aggregates", agg_json},
              {"files", paths}};
}

}  // namespace resunit::cli
