#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <set>
#include <string>

#include "commands.hpp"
#include "doctest.h"
#include "resunit/io.hpp"

namespace fs = std::filesystem;
using resunit::Json;
using resunit::read_json;
using resunit::read_text;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

/// Runs the CLI with `args` inside `dir`, capturing both streams.
Run run_cli(const fs::path& dir, const std::string& args) {
  const fs::path out = dir / "stdout.txt";
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string("cd '") + dir.string() + "' && '" + RESUNIT_CLI_PATH + "' " + args + " >'" +
                          out.string() + "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_text(out);
  r.err = read_text(err);
  return r;
}

/// Fresh scratch directory named after the test.
fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("resunit_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

/// Contents of `path` after its first line.
std::string body(const fs::path& path) {
  const std::string text = read_text(path);
  return text.substr(text.find('\n') + 1);
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("generate writes a deterministic dataset") {
    const fs::path dir = scratch("generate");
    REQUIRE(run_cli(dir, "generate --d 4 --m 4 --n 200 --seed 1 --out a").code == 0);
    REQUIRE(run_cli(dir, "generate --d 4 --m 4 --n 200 --seed 1 --out b").code == 0);
    const std::string csv = read_text(dir / "a/samples.csv");
    CHECK(csv.rfind("# d=4,m=4,n=200,sigma=0,seed=", 0) == 0);
    CHECK(csv == read_text(dir / "b/samples.csv"));
    Json ta = read_json(dir / "a/teacher.json");
    Json tb = read_json(dir / "b/teacher.json");
    CHECK(ta["unit"] == tb["unit"]);
    CHECK(ta["config"]["d"] == 4);

    REQUIRE(run_cli(dir, "generate --d 4 --m 4 --n 200 --seed 1 --noise-sigma 0.1 --out c").code == 0);
    const std::string noisy = read_text(dir / "c/samples.csv");
    CHECK(noisy.rfind("# d=4,m=4,n=200,sigma=0.10000000000000001,", 0) == 0);
    CHECK(body(dir / "c/samples.csv") != body(dir / "a/samples.csv"));
    fs::remove_all(dir);
  }

  TEST_CASE("learn recovers a noiseless d=2 unit") {
    const fs::path dir = scratch("learn");
    REQUIRE(run_cli(dir, "generate --d 2 --n 400 --seed 3 --out data").code == 0);
    const Run r = run_cli(dir, "learn --data data --teacher data/teacher.json --method lp --out fit");
    REQUIRE(r.code == 0);
    const Json report = read_json(dir / "fit/report.json");
    CHECK(report["output_rel"].get<double>() <= 1e-2);
    const Json est = read_json(dir / "fit/estimate.json");
    CHECK(est["method"] == "lp");
    CHECK(est["a_hat"].size() == 2);
    CHECK(est["config"]["learn"].contains("layer1"));

    const Run ev = run_cli(dir, "evaluate --estimate fit --teacher data/teacher.json --out eval.json");
    REQUIRE(ev.code == 0);
    CHECK(read_json(dir / "eval.json")["output_rel"] == report["output_rel"]);
    fs::remove_all(dir);
  }

  TEST_CASE("slack LP on noisy data reports a positive objective") {
    const fs::path dir = scratch("slack");
    REQUIRE(run_cli(dir, "generate --d 2 --n 300 --seed 4 --noise-sigma 0.1 --out data").code == 0);
    REQUIRE(run_cli(dir, "learn --data data/samples.csv --method slack-lp --out fit").code == 0);
    const Json est = read_json(dir / "fit/estimate.json");
    CHECK(est["objectives"]["layer2"].get<double>() > 0.0);
    CHECK(run_cli(dir, "learn --data data --method lp --out lp").code == 4);
    fs::remove_all(dir);
  }

  TEST_CASE("SGD writes a loss trace") {
    const fs::path dir = scratch("sgd");
    REQUIRE(run_cli(dir, "generate --d 2 --n 64 --seed 5 --out data").code == 0);
    REQUIRE(run_cli(dir, "learn --data data --method sgd --epochs 3 --out fit").code == 0);
    CHECK(read_text(dir / "fit/loss_trace.csv").rfind("epoch,mean_loss,eta\n0,", 0) == 0);
    fs::remove_all(dir);
  }

  TEST_CASE("errors map to exit codes and leave no partial output") {
    const fs::path dir = scratch("errors");
    const Run missing = run_cli(dir, "learn --data nowhere.csv --method lp --out fit");
    CHECK(missing.code == 3);
    CHECK_FALSE(fs::exists(dir / "fit"));
    const Json err = Json::parse(missing.err);
    CHECK(err["error"]["exit_code"] == 3);
    CHECK(err["error"]["kind"] == "IoError");

    CHECK(run_cli(dir, "learn --data x.csv --method adam").code == 2);
    CHECK(run_cli(dir, "generate --d 0 --n 10 --out g").code == 2);
    CHECK(run_cli(dir, "experiment nonsense").code == 2);
    CHECK(run_cli(dir, "--help").code == 0);

    resunit::write_text_atomic(dir / "bad.json", "{\"d\": 2, \"colour\": 1}");
    CHECK(run_cli(dir, "generate --config bad.json --out g").code == 2);

    REQUIRE(run_cli(dir, "generate --d 2 --n 50 --seed 1 --out d2").code == 0);
    REQUIRE(run_cli(dir, "generate --d 3 --n 50 --seed 1 --out d3").code == 0);
    REQUIRE(run_cli(dir, "learn --data d2 --method lp --out fit2").code == 0);
    CHECK(run_cli(dir, "evaluate --estimate fit2 --teacher d3/teacher.json --out e.json").code == 5);

    REQUIRE(run_cli(dir, "generate --d 2 --n 5 --seed 1 --out tiny").code == 0);
    CHECK(run_cli(dir, "learn --data tiny --method sgd --epochs 2 --out s").code == 2);
    CHECK_FALSE(fs::exists(dir / "s"));
    fs::remove_all(dir);
  }

  TEST_CASE("experiments embed their config, resume and replay") {
    const fs::path dir = scratch("experiment");
    const std::string args =
        "experiment heatmap --d 2,3 --n 40 --method lp,slack-lp --teachers 1 --trials 2 --test-size 50 --out run";
    const Run first = run_cli(dir, args);
    REQUIRE(first.code == 0);
    CHECK(Json::parse(first.out)["cached_cells"] == 0);
    const std::string trials = read_text(dir / "run/trials.csv");
    CHECK(trials.rfind("# {", 0) == 0);
    CHECK(body(dir / "run/trials.csv").rfind(resunit::trial_csv_header(), 0) == 0);
    const Json summary = read_json(dir / "run/summary.json");
    CHECK(summary["experiment"] == "heatmap");
    CHECK(summary["aggregates"].size() == 4);

    const Run again = run_cli(dir, args);
    REQUIRE(again.code == 0);
    CHECK(Json::parse(again.out)["cached_cells"] == 4);
    CHECK(read_text(dir / "run/trials.csv") == trials);

    const Run replay = run_cli(dir, "experiment --config run/summary.json --jobs 2 --out replay");
    REQUIRE(replay.code == 0);
    CHECK(body(dir / "replay/trials.csv") == body(dir / "run/trials.csv"));
    CHECK(read_json(dir / "replay/summary.json")["config_hash"] == summary["config_hash"]);
    fs::remove_all(dir);
  }

  TEST_CASE("noise robustness rows cover every sigma and method") {
    const fs::path dir = scratch("noise");
    const Run r = run_cli(dir,
                          "experiment noise_robustness --d 3 --n 60 --noise-sigma 0,0.1 --trials 1 --test-size 50 "
                          "--epochs 2 --out run");
    REQUIRE(r.code == 0);
    const Json summary = read_json(dir / "run/summary.json");
    REQUIRE(summary["aggregates"].size() == 6);
    std::set<std::string> methods;
    for (const Json& a : summary["aggregates"]) methods.insert(a["cell"]["method"].get<std::string>());
    CHECK(methods == std::set<std::string>{"sgd", "qp", "slack-lp"});
    fs::remove_all(dir);
  }

  TEST_CASE("vanilla LR rates form a d by n table") {
    const fs::path dir = scratch("vanilla");
    const Run r = run_cli(dir, "experiment vanilla_lr_rates --d 2,3 --n 50,500 --trials 10 --test-size 20 --out run");
    REQUIRE(r.code == 0);
    const std::string table = body(dir / "run/success_rates.csv");
    CHECK(table.rfind("d,50,500\n2,", 0) == 0);
    CHECK(std::count(table.begin(), table.end(), '\n') == 3);
    fs::remove_all(dir);
  }

  TEST_CASE("content hash and exit codes") {
    using namespace resunit::cli;
    CHECK(content_hash("") == "cbf29ce484222325");
    CHECK(content_hash("a") == "af63dc4c8601ec8c");
    CHECK(exit_code_for(resunit::ErrorKind::Io) == kIoError);
    CHECK(exit_code_for(resunit::ErrorKind::SolverFailed) == kSolverError);
    CHECK(exit_code_for(resunit::ErrorKind::Parse) == kConfigError);
  }
}
