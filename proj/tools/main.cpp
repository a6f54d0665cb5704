#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"
#include "resunit/error.hpp"

namespace {

using resunit::Error;
using resunit::ErrorKind;
using resunit::Index;
using resunit::Json;
namespace cli = resunit::cli;

/// Flags override the config file, which overrides defaults; artifacts that
/// embed their config under "config" are accepted as config files too.
Json load_config_file(const std::optional<std::string>& path) {
  if (!path) return Json::object();
  try {
    Json j = resunit::read_json(*path);
    if (j.is_object() && j.contains("config") && j.at("config").is_object()) return j.at("config");
    return j;
  } catch (const Error& e) {
    throw cli::CliError(cli::kConfigError, std::string(resunit::to_string(e.kind())),
                        "config " + *path + ": " + e.what());
  }
}

template <typename T>
std::vector<T> split_list(const std::string& text, const char* flag) {
  std::vector<T> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::istringstream parse(item);
    T v{};
    if (!(parse >> v) || !(parse >> std::ws).eof()) {
      throw cli::CliError(cli::kConfigError, "InvalidArgument",
                          std::string("--") + flag + ": cannot parse '" + item + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw cli::CliError(cli::kConfigError, "InvalidArgument", std::string("--") + flag + ": empty list");
  return out;
}

/// Runs `fn` with configuration errors mapped to the config exit code.
template <typename Fn>
auto configure(Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw cli::CliError(cli::kConfigError, std::string(resunit::to_string(e.kind())), e.what());
  } catch (const nlohmann::json::exception& e) {
    throw cli::CliError(cli::kConfigError, "Parse", e.what());
  }
}

struct SolverFlags {
  std::optional<double> eps_tol;
  std::optional<std::string> layer2_path;
  bool no_tiebreak = false;
  std::optional<int> epochs;
  std::optional<Index> batch_size;
  std::optional<double> eta0;

  void add_to(CLI::App* app) {
    app->add_option("--eps-tol", eps_tol, "Layer-2 rescaling gate threshold");
    app->add_option("--layer2-path", layer2_path, "Layer-2 recovery path")->check(CLI::IsMember({"general", "unique"}));
    app->add_flag("--no-orthant-tiebreak", no_tiebreak, "Disable the orthant tie-break between minimizers");
    app->add_option("--epochs", epochs, "SGD epochs");
    app->add_option("--batch-size", batch_size, "SGD mini-batch size");
    app->add_option("--eta0", eta0, "SGD initial learning rate");
  }

  void apply(resunit::LearnConfig& cfg) const {
    if (eps_tol) cfg.pipeline.layer2.rescale.eps_tol = *eps_tol;
    if (layer2_path) {
      cfg.pipeline.layer2.path =
          *layer2_path == "unique" ? resunit::Layer2Path::Unique : resunit::Layer2Path::GeneralRescaled;
    }
    if (no_tiebreak) {
      cfg.pipeline.layer2.orthant_tiebreak = false;
      cfg.pipeline.layer1.orthant_tiebreak = false;
    }
    if (epochs) cfg.sgd.epochs = *epochs;
    if (batch_size) cfg.sgd.batch_size = *batch_size;
    if (eta0) cfg.sgd.eta0 = *eta0;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Layer-wise convex learning of two-layer ReLU residual units"};
  app.require_subcommand(1);
  std::optional<std::string> config_path;

  // generate
  CLI::App* gen = app.add_subcommand("generate", "Draw a teacher unit and a training set");
  std::optional<Index> g_d, g_m, g_n;
  std::optional<std::uint64_t> g_seed;
  std::optional<double> g_sigma, g_in_mean, g_in_std;
  std::optional<std::string> g_input, g_out;
  gen->add_option("--d", g_d, "Input dimension");
  gen->add_option("--m", g_m, "Output dimension (defaults to d)");
  gen->add_option("--n", g_n, "Number of samples");
  gen->add_option("--seed", g_seed, "Seed");
  gen->add_option("--noise-sigma", g_sigma, "Output noise standard deviation");
  gen->add_option("--input", g_input, "Input distribution")->check(CLI::IsMember({"mixture", "gaussian", "folded-gaussian"}));
  gen->add_option("--input-mean", g_in_mean, "Gaussian input mean");
  gen->add_option("--input-std", g_in_std, "Gaussian input standard deviation");
  gen->add_option("--out", g_out, "Output directory");
  gen->add_option("--config", config_path, "JSON config file");

  // learn
  CLI::App* lrn = app.add_subcommand("learn", "Fit a unit to a dataset");
  std::optional<std::string> l_data, l_teacher, l_method, l_out;
  std::optional<std::uint64_t> l_seed;
  std::optional<Index> l_test;
  SolverFlags l_solver;
  lrn->add_option("--data", l_data, "Dataset CSV or a directory holding samples.csv");
  lrn->add_option("--teacher", l_teacher, "Teacher JSON; when given, an error report is written");
  lrn->add_option("--method", l_method, "Learner")->check(CLI::IsMember({"qp", "lp", "slack-lp", "sgd", "vanilla-lr"}));
  lrn->add_option("--seed", l_seed, "Seed for SGD and the test set");
  lrn->add_option("--test-size", l_test, "Test samples for the error report");
  lrn->add_option("--out", l_out, "Output directory");
  lrn->add_option("--config", config_path, "JSON config file");
  l_solver.add_to(lrn);

  // evaluate
  CLI::App* evl = app.add_subcommand("evaluate", "Score an estimate against a teacher");
  std::optional<std::string> e_est, e_teacher, e_out;
  std::optional<std::uint64_t> e_seed;
  std::optional<Index> e_test;
  evl->add_option("--estimate", e_est, "Estimate JSON or the directory holding it");
  evl->add_option("--teacher", e_teacher, "Teacher JSON");
  evl->add_option("--seed", e_seed, "Test-set seed");
  evl->add_option("--test-size", e_test, "Test samples");
  evl->add_option("--out", e_out, "Report path");
  evl->add_option("--config", config_path, "JSON config file");

  // experiment
  CLI::App* exp = app.add_subcommand("experiment", "Run a study grid");
  std::optional<std::string> x_name, x_d, x_n, x_sigma, x_method, x_input, x_out;
  std::optional<std::uint64_t> x_seed;
  std::optional<Index> x_trials, x_teachers, x_test, x_extra;
  int jobs = 1;
  SolverFlags x_solver;
  exp->add_option("name", x_name, "heatmap, weight_robustness, noise_robustness or vanilla_lr_rates");
  exp->add_option("--d", x_d, "Comma-separated dimensions");
  exp->add_option("--n", x_n, "Comma-separated sample sizes");
  exp->add_option("--noise-sigma", x_sigma, "Comma-separated noise levels");
  exp->add_option("--method", x_method, "Comma-separated learners");
  exp->add_option("--input", x_input, "Input distribution")->check(CLI::IsMember({"mixture", "gaussian", "folded-gaussian"}));
  exp->add_option("--seed", x_seed, "Base seed");
  exp->add_option("--trials", x_trials, "Training sets per teacher");
  exp->add_option("--teachers", x_teachers, "Teachers per dimension");
  exp->add_option("--test-size", x_test, "Test samples per teacher");
  exp->add_option("--extra-outputs", x_extra, "m - d for every teacher");
  exp->add_option("--jobs", jobs, "Worker threads");
  exp->add_option("--out", x_out, "Output directory");
  exp->add_option("--config", config_path, "JSON config file");
  x_solver.add_to(exp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kConfigError;
  }

  try {
    Json summary;
    if (gen->parsed()) {
      const Json file = load_config_file(config_path);
      cli::GenerateConfig cfg = configure([&] { return cli::generate_config_from_json(file); });
      if (g_d) cfg.d = *g_d;
      if (g_m) {
        cfg.m = *g_m;
      } else if (!file.contains("m")) {
        cfg.m = cfg.d;
      }
      if (g_n) cfg.n = *g_n;
      if (g_seed) cfg.seed = *g_seed;
      if (g_sigma) cfg.noise_sigma = *g_sigma;
      if (g_input) cfg.input_kind = resunit::parse_input_kind(*g_input);
      if (g_in_mean) cfg.input_mean = *g_in_mean;
      if (g_in_std) cfg.input_std = *g_in_std;
      if (g_out) cfg.out = *g_out;
      summary = cli::cmd_generate(cfg);
    } else if (lrn->parsed()) {
      const Json file = load_config_file(config_path);
      cli::LearnRunConfig cfg = configure([&] { return cli::learn_run_config_from_json(file); });
      if (l_data) cfg.data = *l_data;
      if (l_teacher) cfg.teacher = *l_teacher;
      if (l_method) cfg.method = resunit::parse_method(*l_method);
      if (l_seed) cfg.seed = *l_seed;
      if (l_test) cfg.test_size = *l_test;
      if (l_out) cfg.out = *l_out;
      l_solver.apply(cfg.learn);
      summary = cli::cmd_learn(cfg);
    } else if (evl->parsed()) {
      const Json file = load_config_file(config_path);
      cli::EvaluateConfig cfg = configure([&] { return cli::evaluate_config_from_json(file); });
      if (e_est) cfg.estimate = *e_est;
      if (e_teacher) cfg.teacher = *e_teacher;
      if (e_seed) cfg.seed = *e_seed;
      if (e_test) cfg.test_size = *e_test;
      if (e_out) cfg.out = *e_out;
      summary = cli::cmd_evaluate(cfg);
    } else {
      const Json file = load_config_file(config_path);
      cli::ExperimentConfig cfg = configure([&] {
        std::optional<cli::Experiment> which;
        if (x_name) {
          which = cli::parse_experiment(*x_name);
        } else if (file.contains("experiment")) {
          which = cli::parse_experiment(file.at("experiment").get<std::string>());
        }
        if (!which) throw Error(ErrorKind::InvalidArgument, "no experiment named");
        cli::ExperimentConfig base;
        base.experiment = *which;
        base.grid = cli::experiment_preset(*which);
        base.out = std::string(cli::to_string(*which));
        cli::ExperimentConfig c = cli::experiment_config_from_json(file, base);
        c.experiment = *which;
        if (x_d) c.grid.dims = split_list<Index>(*x_d, "d");
        if (x_n) c.grid.sample_sizes = split_list<Index>(*x_n, "n");
        if (x_sigma) c.grid.noise_sigmas = split_list<double>(*x_sigma, "noise-sigma");
        if (x_method) {
          c.grid.methods.clear();
          for (const std::string& m : split_list<std::string>(*x_method, "method")) {
            c.grid.methods.push_back(resunit::parse_method(m));
          }
        }
        if (x_input) c.grid.input_kind = resunit::parse_input_kind(*x_input);
        if (x_seed) c.grid.base_seed = *x_seed;
        if (x_trials) c.grid.trials_per_cell = *x_trials;
        if (x_teachers) c.grid.teachers = *x_teachers;
        if (x_test) c.grid.test_set_size = *x_test;
        if (x_extra) c.grid.teacher.extra_outputs = *x_extra;
        if (x_out) c.out = *x_out;
        x_solver.apply(c.grid.learn);
        resunit::validate(c.grid);
        return c;
      });
      summary = cli::cmd_experiment(cfg, jobs);
    }
    std::cout << summary.dump(2) << std::endl;
    return cli::kOk;
  } catch (const cli::CliError& e) {
    std::cerr << cli::error_json(e.code(), e.kind(), e.what()).dump() << std::endl;
    return e.code();
  } catch (const Error& e) {
    const int code = cli::exit_code_for(e.kind());
    std::cerr << cli::error_json(code, std::string(resunit::to_string(e.kind())), e.what()).dump() << std::endl;
    return code;
  } catch (const std::exception& e) {
    std::cerr << cli::error_json(1, "Internal", e.what()).dump() << std::endl;
    return 1;
  }
}
