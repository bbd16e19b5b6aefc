#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "llambo/harness.hpp"

using namespace llambo;
namespace fs = std::filesystem;

namespace {

// Injected by CMake; points at the built CLI binary.
const std::string kCli = LLAMBO_CLI_PATH;

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("llambo_cli_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

// Runs the CLI with stdout/stderr captured into files under `dir`.
int run_cli(const std::string& args, const fs::path& dir) {
  const std::string cmd = kCli + " " + args + " > " + (dir / "stdout.txt").string() + " 2> " +
                          (dir / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("run writes a loadable suite and replays byte-identically") {
  const fs::path dir = temp_dir("run");
  const std::string base =
      "run --task synthetic/Sphere --optimizer random --n-init 3 --n-trials 4 "
      "--n-runs 2 --seed 9 --out ";
  CHECK(run_cli(base + (dir / "a").string(), dir) == 0);
  CHECK(run_cli(base + (dir / "b").string(), dir) == 0);

  const LoadedSuite loaded = load_records((dir / "a").string());
  CHECK(loaded.spec.optimizer == Optimizer::random);
  CHECK(loaded.spec.base_seed == 9);
  REQUIRE(loaded.records.size() == 2);
  for (const RunRecord& rec : loaded.records) {
    CHECK(!rec.failed);
    CHECK(rec.entries.size() == 7);
  }

  for (const char* name : {"spec.json", "run_0.jsonl", "run_1.jsonl"})
    CHECK(slurp(dir / "a" / name) == slurp(dir / "b" / name));
}

TEST_CASE("bad inputs exit nonzero with a diagnostic") {
  const fs::path dir = temp_dir("bad");
  CHECK(run_cli("run --task nosuch/Task --out " + (dir / "x").string(), dir) == 1);
  CHECK(slurp(dir / "stderr.txt").find("error:") != std::string::npos);

  // llambo without any backend flag fails validation.
  CHECK(run_cli("run --optimizer llambo --out " + (dir / "y").string(), dir) == 1);
  CHECK(slurp(dir / "stderr.txt").find("error:") != std::string::npos);

  // no subcommand at all is a usage error.
  CHECK(run_cli("", dir) != 0);
}

TEST_CASE("spec json loads and explicit flags override it") {
  const fs::path dir = temp_dir("specjson");
  ExperimentSpec spec;
  spec.task_id = "synthetic/Sphere";
  spec.optimizer = Optimizer::tpe_ind;
  spec.n_init = 4;
  spec.n_trials = 3;
  spec.n_runs = 2;
  spec.base_seed = 5;
  {
    std::ofstream out(dir / "spec.json", std::ios::binary);
    out << spec.to_json().dump(2) << "\n";
  }
  CHECK(run_cli("run --spec-json " + (dir / "spec.json").string() + " --n-runs 1 --out " +
                    (dir / "out").string(),
                dir) == 0);

  const auto saved = nlohmann::json::parse(slurp(dir / "out" / "spec.json"));
  CHECK(saved.at("optimizer") == "tpe_ind");
  CHECK(saved.at("n_init") == 4);
  CHECK(saved.at("n_trials") == 3);
  CHECK(saved.at("n_runs") == 1);  // the explicit flag wins
  CHECK(saved.at("base_seed") == 5);
}

TEST_CASE("toml config file sets subcommand options") {
  const fs::path dir = temp_dir("toml");
  {
    std::ofstream out(dir / "cfg.toml", std::ios::binary);
    out << "[run]\n"
        << "task = \"synthetic/Sphere\"\n"
        << "optimizer = \"tpe_ind\"\n"
        << "n-init = 3\n"
        << "n-trials = 2\n"
        << "n-runs = 1\n"
        << "seed = 4\n"
        << "out = \"" << (dir / "out").string() << "\"\n";
  }
  CHECK(run_cli("--config " + (dir / "cfg.toml").string() + " run", dir) == 0);

  const auto saved = nlohmann::json::parse(slurp(dir / "out" / "spec.json"));
  CHECK(saved.at("task") == "synthetic/Sphere");
  CHECK(saved.at("optimizer") == "tpe_ind");
  CHECK(saved.at("n_init") == 3);
  CHECK(saved.at("n_trials") == 2);
  CHECK(saved.at("base_seed") == 4);
}

TEST_CASE("aggregate merges suites into deterministic tidy csv") {
  const fs::path dir = temp_dir("agg");
  const std::string common =
      " --task synthetic/Sphere --n-init 3 --n-trials 4 --n-runs 2 --seed 9 --out ";
  CHECK(run_cli("run --optimizer random" + common + (dir / "rand").string(), dir) == 0);
  CHECK(run_cli("run --optimizer tpe_ind" + common + (dir / "tpe").string(), dir) == 0);

  const std::string ins = (dir / "rand").string() + "," + (dir / "tpe").string();
  CHECK(run_cli("aggregate --in " + ins + " --out " + (dir / "agg1").string(), dir) == 0);
  CHECK(run_cli("aggregate --in " + ins + " --out " + (dir / "agg2").string(), dir) == 0);

  const std::string curves = slurp(dir / "agg1" / "curves.csv");
  CHECK(curves == slurp(dir / "agg2" / "curves.csv"));
  CHECK(curves.rfind("task,method,trial,statistic,value\n", 0) == 0);
  // header + 2 methods x 7 trials x {mean, std}
  CHECK(count_lines(curves) == 1 + 2 * 7 * 2);
  CHECK(slurp(dir / "agg1" / "warnings.csv") == "task,method,run_index,reason\n");
}

TEST_CASE("evaluate-surrogate writes the report csv") {
  const fs::path dir = temp_dir("eval");
  CHECK(run_cli("evaluate-surrogate --task synthetic/Sphere --grid 5,10 --models gp --out " +
                    (dir / "out").string(),
                dir) == 0);
  const std::string csv = slurp(dir / "out" / "surrogate_report.csv");
  CHECK(count_lines(csv) == 1 + 2 * 6);  // header + 2 cells x 6 metrics
  CHECK(csv.find("gp,5,") != std::string::npos);
  CHECK(csv.find("gp,10,") != std::string::npos);
}

TEST_CASE("warmstart-study writes per-strategy diversity rows") {
  const fs::path dir = temp_dir("study");
  CHECK(run_cli("warmstart-study --task synthetic/Sphere --strategies random,lhc "
                "--n-init 4 --n-seeds 5 --out " +
                    (dir / "out").string(),
                dir) == 0);
  const std::string csv = slurp(dir / "out" / "warmstart.csv");
  CHECK(count_lines(csv) == 1 + 2 * 2);  // header + 2 strategies x 2 metrics
  CHECK(slurp(dir / "stdout.txt").find("lhc: gen variance") != std::string::npos);
}

TEST_CASE("scripted backend drives an offline llambo run end to end") {
  const fs::path dir = temp_dir("scripted");
  const std::vector<std::string> replies = {
      R"({"x1": 1.0, "x2": 2.0, "x3": 0.0})",
      R"({"x1": 2.0, "x2": 1.0, "x3": 1.0})",
      R"([{"x1": 1.0, "x2": 1.0, "x3": 1.0}, {"x1": 0.5, "x2": 0.5, "x3": 0.0}])",
      "4.0",
      "2.5",
      "no json here, sorry.",
      "oops",
      "3.0",
      "3.5",
  };
  {
    std::ofstream out(dir / "replies.json", std::ios::binary);
    out << nlohmann::json{{"replies", replies}, {"cycle", false}}.dump(2);
  }
  const std::string base =
      "run --task synthetic/Sphere --optimizer llambo --warmstart llm_full "
      "--n-init 2 --n-trials 2 --n-runs 1 --seed 5 --mc-samples 1 --k-candidates 2 "
      "--scripted-replies " +
      (dir / "replies.json").string() + " --out ";
  CHECK(run_cli(base + (dir / "a").string(), dir) == 0);
  CHECK(run_cli(base + (dir / "b").string(), dir) == 0);

  const LoadedSuite loaded = load_records((dir / "a").string());
  REQUIRE(loaded.records.size() == 1);
  CHECK(!loaded.records[0].failed);
  CHECK(loaded.records[0].entries.size() == 4);
  CHECK(count_lines(slurp(dir / "a" / "llm_0.jsonl")) == 9);

  for (const char* name : {"spec.json", "run_0.jsonl", "llm_0.jsonl"})
    CHECK(slurp(dir / "a" / name) == slurp(dir / "b" / name));
}

TEST_CASE("environment variable supplies the backend url") {
  const fs::path dir = temp_dir("env");
  {
    std::ofstream out(dir / "replies.json", std::ios::binary);
    out << nlohmann::json{{"replies", {"0.5"}}, {"cycle", true}}.dump(2);
  }
  // The scripted fixture keeps the run offline; the spec snapshot must still
  // record the endpoint picked up from the environment.
  const std::string cmd = "LLAMBO_BACKEND_URL=http://example.invalid:1 " + kCli +
                          " run --task synthetic/Sphere --optimizer random "
                          "--n-init 2 --n-trials 0 --n-runs 1 --scripted-replies " +
                          (dir / "replies.json").string() + " --out " + (dir / "out").string() +
                          " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 0);

  const auto saved = nlohmann::json::parse(slurp(dir / "out" / "spec.json"));
  CHECK(saved.at("backend").at("endpoint") == "http://example.invalid:1");
}
