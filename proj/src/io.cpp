#include "resunit/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "resunit/error.hpp"

namespace resunit {

namespace fs = std::filesystem;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

double number(const Json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) throw Error(ErrorKind::Parse, "expected a number, got " + j.dump());
  return j.get<double>();
}

Json number_json(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& context) {
  if (!j.is_object()) throw Error(ErrorKind::Parse, context + ": expected a JSON object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
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

std::string json_string(const Json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    throw Error(ErrorKind::Parse, std::string("missing string field '") + key + "'");
  }
  return j.at(key).get<std::string>();
}

const Json& json_field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw Error(ErrorKind::Parse, std::string("missing field '") + key + "'");
  return j.at(key);
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

}  // namespace

std::string_view to_string(InputDistribution::Kind kind) {
  switch (kind) {
    case InputDistribution::Kind::GaussianIid: return "gaussian";
    case InputDistribution::Kind::FoldedGaussianIid: return "folded-gaussian";
    case InputDistribution::Kind::GaussUniformMixture: return "mixture";
  }
  return "mixture";
}

InputDistribution::Kind parse_input_kind(std::string_view text) {
  if (text == "gaussian") return InputDistribution::Kind::GaussianIid;
  if (text == "folded-gaussian") return InputDistribution::Kind::FoldedGaussianIid;
  if (text == "mixture") return InputDistribution::Kind::GaussUniformMixture;
  throw Error(ErrorKind::Parse, "unknown input kind '" + std::string(text) + "' (expected mixture, gaussian or folded-gaussian)");
}

// ---------------------------------------------------------------- matrices

Json to_json(const Mat& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index k = 0; k < m.cols(); ++k) row.push_back(number_json(m(i, k)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json to_json(const Vec& v) {
  Json arr = Json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(number_json(v(i)));
  return arr;
}

Mat mat_from_json(const Json& j) {
  if (!j.is_array()) throw Error(ErrorKind::Parse, "matrix must be an array of rows");
  const Index rows = static_cast<Index>(j.size());
  const Index cols = rows ? static_cast<Index>(j.at(0).size()) : 0;
  Mat m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const Json& row = j.at(static_cast<std::size_t>(i));
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      throw Error(ErrorKind::Parse, "matrix rows must be arrays of equal length");
    }
    for (Index k = 0; k < cols; ++k) m(i, k) = number(row.at(static_cast<std::size_t>(k)));
  }
  return m;
}

Vec vec_from_json(const Json& j) {
  if (!j.is_array()) throw Error(ErrorKind::Parse, "vector must be an array");
  Vec v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) v(i) = number(j.at(static_cast<std::size_t>(i)));
  return v;
}

// ---------------------------------------------------------------- model

Json to_json(const ResidualUnit& unit) {
  return Json{{"d", unit.d()}, {"m", unit.m()}, {"a", to_json(unit.a)}, {"b", to_json(unit.b)}};
}

ResidualUnit unit_from_json(const Json& j) {
  ResidualUnit unit{mat_from_json(json_field(j, "a")), mat_from_json(json_field(j, "b"))};
  validate_unit(unit, false);
  return unit;
}

// ---------------------------------------------------------------- configs

Json to_json(const SolverConfig& c) {
  return Json{{"feas_tol", c.feas_tol},
              {"gap_tol", c.gap_tol},
              {"stat_tol", c.stat_tol},
              {"max_iterations", c.max_iterations},
              {"rho", c.rho},
              {"sigma", c.sigma},
              {"alpha", c.alpha},
              {"polish", c.polish},
              {"check_interval", c.check_interval},
              {"pivot_tol", c.pivot_tol},
              {"degenerate_pivots_before_bland", c.degenerate_pivots_before_bland},
              {"interior_tol", c.interior_tol},
              {"max_newton_steps", c.max_newton_steps}};
}

SolverConfig solver_config_from_json(const Json& j, SolverConfig c) {
  check_keys(j, {"feas_tol", "gap_tol", "stat_tol", "max_iterations", "rho", "sigma", "alpha", "polish",
                 "check_interval", "pivot_tol", "degenerate_pivots_before_bland", "interior_tol",
                 "max_newton_steps"},
             "solver");
  read_field(j, "feas_tol", c.feas_tol);
  read_field(j, "gap_tol", c.gap_tol);
  read_field(j, "stat_tol", c.stat_tol);
  read_field(j, "max_iterations", c.max_iterations);
  read_field(j, "rho", c.rho);
  read_field(j, "sigma", c.sigma);
  read_field(j, "alpha", c.alpha);
  read_field(j, "polish", c.polish);
  read_field(j, "check_interval", c.check_interval);
  read_field(j, "pivot_tol", c.pivot_tol);
  read_field(j, "degenerate_pivots_before_bland", c.degenerate_pivots_before_bland);
  read_field(j, "interior_tol", c.interior_tol);
  read_field(j, "max_newton_steps", c.max_newton_steps);
  if (c.feas_tol <= 0 || c.gap_tol <= 0 || c.stat_tol <= 0 || c.max_iterations < 1 || c.rho <= 0 ||
      c.check_interval < 1 || c.alpha <= 0 || c.alpha >= 2) {
    throw Error(ErrorKind::InvalidArgument, "solver config out of range");
  }
  return c;
}

Json to_json(const RescaleConfig& c) {
  return Json{{"eps_tol", c.eps_tol}, {"min_neg_samples", c.min_neg_samples}};
}

RescaleConfig rescale_config_from_json(const Json& j, RescaleConfig c) {
  check_keys(j, {"eps_tol", "min_neg_samples"}, "rescale");
  read_field(j, "eps_tol", c.eps_tol);
  read_field(j, "min_neg_samples", c.min_neg_samples);
  if (!(c.eps_tol > 0)) throw Error(ErrorKind::InvalidArgument, "eps_tol must be positive");
  return c;
}

Json to_json(const Layer1Config& c) {
  return Json{{"activation_rel_threshold", c.activation_rel_threshold},
              {"k_min", c.k_min},
              {"k_tol", c.k_tol},
              {"min_pos_samples", c.min_pos_samples},
              {"orthant_tiebreak", c.orthant_tiebreak}};
}

Layer1Config layer1_config_from_json(const Json& j, Layer1Config c) {
  check_keys(j, {"activation_rel_threshold", "k_min", "k_tol", "min_pos_samples", "orthant_tiebreak"}, "layer1");
  read_field(j, "activation_rel_threshold", c.activation_rel_threshold);
  read_field(j, "k_min", c.k_min);
  read_field(j, "k_tol", c.k_tol);
  read_field(j, "min_pos_samples", c.min_pos_samples);
  read_field(j, "orthant_tiebreak", c.orthant_tiebreak);
  if (!(c.k_min > 0 && c.k_min <= 1)) throw Error(ErrorKind::InvalidArgument, "k_min must be in (0, 1]");
  return c;
}

Json to_json(const SgdConfig& c) {
  return Json{{"batch_size", c.batch_size},
              {"epochs", c.epochs},
              {"eta0", c.eta0},
              {"gamma", c.gamma},
              {"seed", c.seed},
              {"init", c.init == SgdConfig::Init::GaussianSmall ? "gaussian-small" : "teacher-perturbed"},
              {"init_scale", c.init_scale},
              {"divergence_factor", c.divergence_factor}};
}

SgdConfig sgd_config_from_json(const Json& j, SgdConfig c) {
  check_keys(j, {"batch_size", "epochs", "eta0", "gamma", "seed", "init", "init_scale", "divergence_factor"}, "sgd");
  read_field(j, "batch_size", c.batch_size);
  read_field(j, "epochs", c.epochs);
  read_field(j, "eta0", c.eta0);
  read_field(j, "gamma", c.gamma);
  read_field(j, "seed", c.seed);
  read_field(j, "init_scale", c.init_scale);
  read_field(j, "divergence_factor", c.divergence_factor);
  if (j.contains("init")) {
    const std::string s = json_string(j, "init");
    if (s == "gaussian-small") {
      c.init = SgdConfig::Init::GaussianSmall;
    } else if (s == "teacher-perturbed") {
      c.init = SgdConfig::Init::TeacherPerturbed;
    } else {
      throw Error(ErrorKind::Parse, "unknown sgd init '" + s + "'");
    }
  }
  if (c.batch_size < 1 || c.epochs < 0 || !(c.eta0 > 0) || c.gamma < 0) {
    throw Error(ErrorKind::InvalidArgument, "sgd config out of range");
  }
  return c;
}

Json to_json(const LearnConfig& c) {
  return Json{{"solver", to_json(c.pipeline.layer2.solver)},
              {"rescale", to_json(c.pipeline.layer2.rescale)},
              {"layer2_path", std::string(to_string(c.pipeline.layer2.path))},
              {"layer2_orthant_tiebreak", c.pipeline.layer2.orthant_tiebreak},
              {"layer1", to_json(c.pipeline.layer1)},
              {"sgd", to_json(c.sgd)}};
}

LearnConfig learn_config_from_json(const Json& j, LearnConfig c) {
  check_keys(j, {"solver", "rescale", "layer2_path", "layer2_orthant_tiebreak", "layer1", "sgd"}, "learn");
  if (j.contains("solver")) {
    c.pipeline.layer2.solver = solver_config_from_json(j.at("solver"), c.pipeline.layer2.solver);
  }
  c.pipeline.layer1.solver = c.pipeline.layer2.solver;
  if (j.contains("rescale")) c.pipeline.layer2.rescale = rescale_config_from_json(j.at("rescale"), c.pipeline.layer2.rescale);
  if (j.contains("layer2_path")) {
    const std::string p = json_string(j, "layer2_path");
    if (p == "unique") {
      c.pipeline.layer2.path = Layer2Path::Unique;
    } else if (p == "general") {
      c.pipeline.layer2.path = Layer2Path::GeneralRescaled;
    } else {
      throw Error(ErrorKind::Parse, "unknown layer2_path '" + p + "'");
    }
  }
  read_field(j, "layer2_orthant_tiebreak", c.pipeline.layer2.orthant_tiebreak);
  if (j.contains("layer1")) {
    const SolverConfig solver = c.pipeline.layer1.solver;
    c.pipeline.layer1 = layer1_config_from_json(j.at("layer1"), c.pipeline.layer1);
    c.pipeline.layer1.solver = solver;
  }
  if (j.contains("sgd")) c.sgd = sgd_config_from_json(j.at("sgd"), c.sgd);
  return c;
}

Json to_json(const TeacherConfig& t) {
  return Json{{"layer1_mean", t.layer1_mean},
              {"layer1_std", t.layer1_std},
              {"layer2_mean", t.layer2_mean},
              {"layer2_std", t.layer2_std},
              {"extra_outputs", t.extra_outputs},
              {"require_non_scale", t.require_non_scale}};
}

TeacherConfig teacher_config_from_json(const Json& j, TeacherConfig t) {
  check_keys(j, {"layer1_mean", "layer1_std", "layer2_mean", "layer2_std", "extra_outputs", "require_non_scale"},
             "teacher");
  read_field(j, "layer1_mean", t.layer1_mean);
  read_field(j, "layer1_std", t.layer1_std);
  read_field(j, "layer2_mean", t.layer2_mean);
  read_field(j, "layer2_std", t.layer2_std);
  read_field(j, "extra_outputs", t.extra_outputs);
  read_field(j, "require_non_scale", t.require_non_scale);
  if (!(t.layer1_std >= 0.0) || !(t.layer2_std >= 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "teacher standard deviations must be nonnegative");
  }
  if (t.extra_outputs < 0) throw Error(ErrorKind::InvalidArgument, "extra_outputs must be nonnegative");
  return t;
}

Json to_json(const TrialGrid& g) {
  Json methods = Json::array();
  for (Method m : g.methods) methods.push_back(std::string(to_string(m)));
  return Json{{"dims", g.dims},
              {"sample_sizes", g.sample_sizes},
              {"noise_sigmas", g.noise_sigmas},
              {"methods", methods},
              {"teachers", g.teachers},
              {"trials_per_cell", g.trials_per_cell},
              {"test_set_size", g.test_set_size},
              {"base_seed", g.base_seed},
              {"input", Json{{"kind", std::string(to_string(g.input_kind))}, {"mean", g.input_mean}, {"std", g.input_std}}},
              {"teacher", to_json(g.teacher)},
              {"learn", to_json(g.learn)}};
}

TrialGrid grid_from_json(const Json& j, TrialGrid g) {
  check_keys(j, {"dims", "sample_sizes", "noise_sigmas", "methods", "teachers", "trials_per_cell",
                 "test_set_size", "base_seed", "input", "teacher", "learn"},
             "grid");
  read_field(j, "dims", g.dims);
  read_field(j, "sample_sizes", g.sample_sizes);
  read_field(j, "noise_sigmas", g.noise_sigmas);
  if (j.contains("methods")) {
    g.methods.clear();
    for (const Json& m : j.at("methods")) {
      if (!m.is_string()) throw Error(ErrorKind::Parse, "methods must be strings");
      g.methods.push_back(parse_method(m.get<std::string>()));
    }
  }
  read_field(j, "teachers", g.teachers);
  read_field(j, "trials_per_cell", g.trials_per_cell);
  read_field(j, "test_set_size", g.test_set_size);
  read_field(j, "base_seed", g.base_seed);
  if (j.contains("input")) {
    const Json& in = j.at("input");
    check_keys(in, {"kind", "mean", "std"}, "input");
    if (in.contains("kind")) g.input_kind = parse_input_kind(json_string(in, "kind"));
    read_field(in, "mean", g.input_mean);
    read_field(in, "std", g.input_std);
  }
  if (j.contains("teacher")) g.teacher = teacher_config_from_json(j.at("teacher"), g.teacher);
  if (j.contains("learn")) g.learn = learn_config_from_json(j.at("learn"), g.learn);
  validate(g);
  return g;
}

// ---------------------------------------------------------------- reports

Json to_json(const SolveReport& r) {
  return Json{{"status", std::string(to_string(r.status))},
              {"objective_value", number_json(r.objective_value)},
              {"max_infeasibility", number_json(r.max_infeasibility)},
              {"iterations", r.iterations},
              {"stationarity", number_json(r.stationarity)},
              {"duality_gap", number_json(r.duality_gap)},
              {"polished", r.polished},
              {"point", to_json(r.point)}};
}

Json to_json(const Layer2Estimate& e) {
  Json status = Json::array();
  for (SolveStatus s : e.row_status) status.push_back(std::string(to_string(s)));
  return Json{{"c_hat", to_json(e.c_hat)},
              {"b_hat", to_json(e.b_hat)},
              {"k_hat", to_json(e.k_hat)},
              {"used_path", std::string(to_string(e.used_path))},
              {"objective", number_json(e.objective)},
              {"row_status", status},
              {"warnings", e.warnings},
              {"tiebroken", e.tiebroken},
              {"xi_hat", to_json(e.xi_hat)},
              {"hidden", to_json(e.hidden)}};
}

Json to_json(const Layer1Estimate& e) {
  Json rows = Json::array();
  for (const Layer1Row& r : e.rows) {
    rows.push_back(Json{{"k", number_json(r.scale.k)},
                        {"residual", number_json(r.scale.residual)},
                        {"activated_samples", r.scale.samples},
                        {"clamped", r.scale.clamped},
                        {"degenerate", r.degenerate},
                        {"centered", r.centered},
                        {"tiebroken", r.tiebroken},
                        {"status", std::string(to_string(r.status))}});
  }
  return Json{{"a_hat", to_json(e.a_hat)},
              {"k_hat", to_json(e.k_hat)},
              {"raw_a", to_json(e.raw_a)},
              {"objective", number_json(e.objective)},
              {"rows", rows},
              {"warnings", e.warnings}};
}

Json to_json(const ErrorReport& r) {
  return Json{{"layer1_rel", number_json(r.layer1_rel)},
              {"layer2_rel", number_json(r.layer2_rel)},
              {"output_rel", number_json(r.output_rel)},
              {"n", r.n},
              {"d", r.d},
              {"seed", r.seed},
              {"method", r.method}};
}

Json to_json(const Cell& c) {
  return Json{{"d", c.d}, {"n", c.n}, {"sigma", c.sigma}, {"method", std::string(to_string(c.method))}};
}

Json to_json(const TrialRow& r) {
  return Json{{"cell", to_json(r.cell)},
              {"teacher", r.teacher},
              {"trial", r.trial},
              {"teacher_seed", r.teacher_seed},
              {"data_seed", r.data_seed},
              {"test_seed", r.test_seed},
              {"ok", r.ok},
              {"success", r.success},
              {"status", r.status},
              {"message", r.message},
              {"layer1_rel", number_json(r.layer1_rel)},
              {"layer2_rel", number_json(r.layer2_rel)},
              {"output_rel", number_json(r.output_rel)},
              {"seconds", r.seconds}};
}

TrialRow trial_row_from_json(const Json& j) {
  TrialRow r;
  try {
    const Json& c = json_field(j, "cell");
    r.cell = {c.at("d").get<Index>(), c.at("n").get<Index>(), c.at("sigma").get<double>(),
              parse_method(c.at("method").get<std::string>())};
    r.teacher = j.at("teacher").get<Index>();
    r.trial = j.at("trial").get<Index>();
    r.teacher_seed = j.at("teacher_seed").get<std::uint64_t>();
    r.data_seed = j.at("data_seed").get<std::uint64_t>();
    r.test_seed = j.at("test_seed").get<std::uint64_t>();
    r.ok = j.at("ok").get<bool>();
    r.success = j.at("success").get<bool>();
    r.status = j.at("status").get<std::string>();
    r.message = j.at("message").get<std::string>();
    r.layer1_rel = number(j.at("layer1_rel"));
    r.layer2_rel = number(j.at("layer2_rel"));
    r.output_rel = number(j.at("output_rel"));
    r.seconds = j.at("seconds").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("trial row: ") + e.what());
  }
  return r;
}

Json to_json(const AggregateRow& r) {
  auto summary = [](const Summary& s) {
    return Json{{"mean", number_json(s.mean)}, {"std", number_json(s.std)}, {"median", number_json(s.median)}};
  };
  return Json{{"cell", to_json(r.cell)},
              {"trials", r.trials},
              {"failures", r.failures},
              {"successes", r.successes},
              {"success_rate", r.success_rate},
              {"layer1_rel", summary(r.layer1)},
              {"layer2_rel", summary(r.layer2)},
              {"output_rel", summary(r.output)}};
}

// ---------------------------------------------------------------- programs

Json to_json(const QpProblem& p) {
  Json layout = Json::array();
  for (const VarBlock& b : p.layout) layout.push_back(Json{{"name", b.name}, {"offset", b.offset}, {"size", b.size}});
  return Json{{"kind", "qp"},
              {"num_vars", p.num_vars()},
              {"hessian", to_json(p.hessian)},
              {"linear", to_json(p.linear)},
              {"constant", p.constant},
              {"nonneg", p.nonneg},
              {"layout", layout}};
}

Json to_json(const LpProblem& p) {
  Json layout = Json::array();
  for (const VarBlock& b : p.layout) layout.push_back(Json{{"name", b.name}, {"offset", b.offset}, {"size", b.size}});
  return Json{{"kind", "lp"},
              {"num_vars", p.num_vars()},
              {"num_constraints", p.num_constraints()},
              {"objective", to_json(p.objective)},
              {"ineq_lhs", to_json(p.ineq_lhs)},
              {"ineq_rhs", to_json(p.ineq_rhs)},
              {"nonneg_vars", p.nonneg_vars},
              {"layout", layout}};
}

namespace {

std::vector<VarBlock> layout_from_json(const Json& j) {
  std::vector<VarBlock> out;
  if (!j.contains("layout")) return out;
  for (const Json& b : j.at("layout")) {
    out.push_back({b.at("name").get<std::string>(), b.at("offset").get<Index>(), b.at("size").get<Index>()});
  }
  return out;
}

}  // namespace

QpProblem qp_from_json(const Json& j) {
  QpProblem p;
  try {
    p.hessian = mat_from_json(json_field(j, "hessian"));
    p.linear = vec_from_json(json_field(j, "linear"));
    p.constant = j.value("constant", 0.0);
    p.nonneg = json_field(j, "nonneg").get<std::vector<Index>>();
    p.layout = layout_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("QP: ") + e.what());
  }
  validate(p);
  return p;
}

LpProblem lp_from_json(const Json& j) {
  LpProblem p;
  try {
    p.objective = vec_from_json(json_field(j, "objective"));
    p.ineq_lhs = mat_from_json(json_field(j, "ineq_lhs"));
    p.ineq_rhs = vec_from_json(json_field(j, "ineq_rhs"));
    p.nonneg_vars = json_field(j, "nonneg_vars").get<std::vector<Index>>();
    p.layout = layout_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("LP: ") + e.what());
  }
  validate(p);
  return p;
}

// ---------------------------------------------------------------- CSV

std::string dataset_csv(const SampleSet& s) {
  std::ostringstream out;
  out << "# d=" << s.d() << ",m=" << s.m() << ",n=" << s.n() << ",sigma=" << format_double(s.noise_sigma)
      << ",seed=" << s.seed << "\n";
  for (Index i = 0; i < s.n(); ++i) {
    for (Index k = 0; k < s.d(); ++k) out << (k ? "," : "") << format_double(s.xs(i, k));
    for (Index k = 0; k < s.m(); ++k) out << "," << format_double(s.ys(i, k));
    out << "\n";
  }
  return out.str();
}

SampleSet parse_dataset_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) {
    throw Error(ErrorKind::Parse, "dataset must start with a '# d=..,m=..,n=..,sigma=..,seed=..' header");
  }
  long long d = -1, m = -1, n = -1;
  double sigma = 0.0;
  unsigned long long seed = 0;
  std::istringstream header(line.substr(2));
  std::string field;
  while (std::getline(header, field, ',')) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::Parse, "malformed header field '" + field + "'");
    const std::string key = field.substr(0, eq);
    const std::string value = field.substr(eq + 1);
    try {
      if (key == "d") d = std::stoll(value);
      else if (key == "m") m = std::stoll(value);
      else if (key == "n") n = std::stoll(value);
      else if (key == "sigma") sigma = std::stod(value);
      else if (key == "seed") seed = std::stoull(value);
      else throw Error(ErrorKind::Parse, "unknown header key '" + key + "'");
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::Parse, "bad header value for '" + key + "'");
    }
  }
  if (d < 1 || m < 1 || n < 0) throw Error(ErrorKind::Parse, "header must give d >= 1, m >= 1 and n >= 0");
  SampleSet s;
  s.xs = Mat(n, d);
  s.ys = Mat(n, m);
  s.noise_sigma = sigma;
  s.seed = seed;
  Index row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (row >= n) throw Error(ErrorKind::Parse, "more data rows than n=" + std::to_string(n));
    std::istringstream ls(line);
    std::string cell;
    Index col = 0;
    while (std::getline(ls, cell, ',')) {
      if (col >= d + m) throw Error(ErrorKind::Parse, "row " + std::to_string(row) + " has too many columns");
      double v;
      try {
        v = std::stod(cell);
      } catch (const std::logic_error&) {
        throw Error(ErrorKind::Parse, "row " + std::to_string(row) + ": bad number '" + cell + "'");
      }
      if (col < d) s.xs(row, col) = v;
      else s.ys(row, col - d) = v;
      ++col;
    }
    if (col != d + m) throw Error(ErrorKind::Parse, "row " + std::to_string(row) + " has too few columns");
    ++row;
  }
  if (row != n) throw Error(ErrorKind::Parse, "expected " + std::to_string(n) + " rows, found " + std::to_string(row));
  return s;
}

Json dataset_meta(const SampleSet& s) {
  return Json{{"d", s.d()}, {"m", s.m()}, {"n", s.n()}, {"noise_sigma", s.noise_sigma}, {"seed", s.seed}};
}

std::string trial_csv_header() {
  return "d,n,sigma,method,teacher,trial,teacher_seed,data_seed,test_seed,ok,success,status,"
         "layer1_rel,layer2_rel,output_rel,message";
}

std::string trial_csv_line(const TrialRow& r) {
  std::ostringstream out;
  out << r.cell.d << "," << r.cell.n << "," << format_double(r.cell.sigma) << "," << to_string(r.cell.method) << ","
      << r.teacher << "," << r.trial << "," << r.teacher_seed << "," << r.data_seed << "," << r.test_seed << ","
      << (r.ok ? 1 : 0) << "," << (r.success ? 1 : 0) << "," << csv_escape(r.status) << ","
      << format_double(r.layer1_rel) << "," << format_double(r.layer2_rel) << "," << format_double(r.output_rel)
      << "," << csv_escape(r.message);
  return out.str();
}

std::string aggregate_csv_header() {
  return "d,n,sigma,method,trials,failures,successes,success_rate,"
         "layer1_mean,layer1_std,layer1_median,layer2_mean,layer2_std,layer2_median,"
         "output_mean,output_std,output_median";
}

std::string aggregate_csv_line(const AggregateRow& r) {
  std::ostringstream out;
  out << r.cell.d << "," << r.cell.n << "," << format_double(r.cell.sigma) << "," << to_string(r.cell.method) << ","
      << r.trials << "," << r.failures << "," << r.successes << "," << format_double(r.success_rate);
  for (const Summary* s : {&r.layer1, &r.layer2, &r.output}) {
    out << "," << format_double(s->mean) << "," << format_double(s->std) << "," << format_double(s->median);
  }
  return out.str();
}

std::string loss_trace_csv(const std::vector<EpochLoss>& trace) {
  std::ostringstream out;
  out << "epoch,mean_loss,eta\n";
  for (const EpochLoss& e : trace) {
    out << e.epoch << "," << format_double(e.mean_loss) << "," << format_double(e.eta) << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------- files

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorKind::Io, "error reading " + path.string());
  return ss.str();
}

void write_text_atomic(const fs::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) {
      fs::remove(tmp, ec);
      throw Error(ErrorKind::Io, "error writing " + tmp.string());
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorKind::Io, "cannot move " + tmp.string() + " into place");
  }
}

Json read_json(const fs::path& path) {
  const std::string text = read_text(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
  }
}

}  // namespace resunit
