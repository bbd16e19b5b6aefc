// Command-line front end: composes tasks, optimizers, and warmstart strategies
// into seeded experiment suites and writes the persisted records plus the
// aggregated CSV reports.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "llambo/harness.hpp"

#include <CLI11.hpp>

namespace {

using namespace llambo;
namespace fs = std::filesystem;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Set when the user supplied any backend flag; LLM methods fail validation
// without one.
struct BackendFlags {
  std::string url;
  std::string model = "llama3.1:70b";
  double temperature = 0.7;
  int retries = 2;
  int timeout = 30;
  std::string scripted;

  std::optional<BackendConfig> to_config() const {
    if (url.empty() && scripted.empty()) return std::nullopt;
    BackendConfig cfg;
    if (!url.empty()) cfg.endpoint = url;
    cfg.model = model;
    cfg.temperature = temperature;
    cfg.max_retries = retries;
    cfg.timeout_seconds = timeout;
    cfg.scripted_replies = scripted;
    return cfg;
  }
};

void add_backend_flags(CLI::App* cmd, BackendFlags& flags) {
  cmd->add_option("--backend-url", flags.url, "completion server endpoint")
      ->envname("LLAMBO_BACKEND_URL");
  cmd->add_option("--model", flags.model, "model name sent to the server");
  cmd->add_option("--temperature", flags.temperature, "sampling temperature");
  cmd->add_option("--retries", flags.retries, "corrective retries per query");
  cmd->add_option("--timeout", flags.timeout, "request timeout in seconds");
  cmd->add_option("--scripted-replies", flags.scripted,
                  "JSON fixture of canned replies (selects the offline backend)");
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

int cmd_run(const ExperimentSpec& spec, const std::string& out_dir, bool serial) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<RunRecord> records =
      run_suite(spec, serial ? Exec::serial : Exec::parallel);
  save_records(out_dir, spec, records);

  int failed = 0;
  double sum_final = 0.0;
  int counted = 0;
  for (const RunRecord& r : records) {
    if (r.failed) {
      ++failed;
      continue;
    }
    if (!r.curve.values.empty()) {
      sum_final += r.curve.values.back();
      ++counted;
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << spec.method_label() << " on " << spec.task_id << ": " << records.size()
            << " runs";
  if (failed > 0) std::cout << " (" << failed << " failed)";
  if (counted > 0) std::cout << ", mean final regret " << fmt(sum_final / counted);
  std::cout << ", wrote " << out_dir << " in " << fmt(secs) << " s\n";
  return 0;
}

int cmd_evaluate(const Task& task, const SurrogateEvalSettings& settings,
                 const std::string& out_dir) {
  const std::vector<SurrogateReport> reports = evaluate_surrogates(task, settings);
  fs::create_directories(out_dir);
  const std::string path = (fs::path(out_dir) / "surrogate_report.csv").string();
  write_surrogate_csv(reports, path);
  std::cout << "model      n_train  nrmse      r2         nlpd       coverage  sharpness\n";
  for (const SurrogateReport& r : reports) {
    std::printf("%-10s %-8d %-10s %-10s %-10s %-9s %-10s%s\n", r.model.c_str(), r.n_train,
                fmt(r.nrmse).c_str(), fmt(r.r2).c_str(), fmt(r.nlpd_mean).c_str(),
                fmt(r.coverage).c_str(), fmt(r.sharpness).c_str(),
                r.degenerate ? "  [degenerate]" : "");
  }
  std::cout << "wrote " << path << "\n";
  return 0;
}

int cmd_warmstart_study(const Task& task, const std::vector<std::string>& strategy_names,
                        int n_init, int n_seeds, std::uint64_t seed,
                        const std::optional<BackendConfig>& backend,
                        const std::string& out_dir) {
  std::vector<Warmstart> strategies;
  strategies.reserve(strategy_names.size());
  for (const std::string& s : strategy_names) strategies.push_back(warmstart_from_string(s));
  const std::vector<WarmstartStudyRow> rows =
      warmstart_study(task, strategies, n_init, n_seeds, seed, backend,
                      PromptTemplates::defaults());
  fs::create_directories(out_dir);
  const std::string path = (fs::path(out_dir) / "warmstart.csv").string();
  write_warmstart_csv(rows, path);
  for (const WarmstartStudyRow& r : rows)
    std::cout << r.strategy << ": gen variance " << fmt(r.mean_gen_variance)
              << ", mean |corr| " << fmt(r.mean_abs_corr) << "\n";
  std::cout << "wrote " << path << "\n";
  return 0;
}

int cmd_ablation(const Task& task, const SurrogateEvalSettings& settings,
                 const std::string& out_dir) {
  const std::vector<AblationPair> pairs = ablation_compare(task, settings);
  std::string csv = "model,n_train,split,level,metric,value\n";
  auto append = [&csv](const SurrogateReport& r, const char* level) {
    const std::pair<const char*, double> metrics[] = {
        {"nrmse", r.nrmse},         {"r2", r.r2},
        {"nlpd", r.nlpd_mean},      {"coverage", r.coverage},
        {"sharpness", r.sharpness}, {"degenerate", r.degenerate ? 1.0 : 0.0}};
    for (const auto& [name, value] : metrics) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.10g", value);
      csv += r.model + "," + std::to_string(r.n_train) + "," + std::to_string(r.split_id) +
             "," + level + "," + name + "," + buf + "\n";
    }
  };
  for (const AblationPair& p : pairs) {
    append(p.full, "full");
    append(p.none, "none");
  }
  fs::create_directories(out_dir);
  const fs::path path = fs::path(out_dir) / "ablation.csv";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << csv;
  std::cout << "wrote " << path.string() << " (" << pairs.size() << " paired cells)\n";
  return 0;
}

int cmd_aggregate(const std::vector<std::string>& in_dirs, const std::string& out_dir,
                  const std::string& norm_name, const std::string& bounds_path) {
  std::vector<SuiteResult> suites;
  suites.reserve(in_dirs.size());
  for (const std::string& dir : in_dirs) {
    LoadedSuite loaded = load_records(dir);
    const Direction direction = find_task(loaded.spec.task_id).direction;
    suites.push_back({std::move(loaded.spec), direction, std::move(loaded.records)});
  }
  const Normalization norm =
      norm_name == "global" ? Normalization::global : Normalization::per_task;
  BoundsMap bounds;
  if (!bounds_path.empty()) bounds = load_bounds(bounds_path);
  aggregate_curves(suites, out_dir, norm, bounds_path.empty() ? nullptr : &bounds);
  std::cout << "aggregated " << suites.size() << " suite(s) into " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian-optimization benchmark harness"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read options from a TOML/INI file");

  // --- run ---------------------------------------------------------------------
  auto* run = app.add_subcommand("run", "execute an experiment suite");
  ExperimentSpec defaults;
  std::string task_id = defaults.task_id;
  std::string optimizer_name = "random";
  std::string warmstart_name = "random";
  int n_init = defaults.n_init, n_trials = defaults.n_trials, n_runs = defaults.n_runs;
  std::uint64_t seed = defaults.base_seed;
  int mc_samples = defaults.mc_samples, k_candidates = defaults.k_candidates;
  std::string spec_json, run_out = "out";
  bool serial = false;
  BackendFlags run_backend;
  auto* opt_task = run->add_option("--task", task_id, "task id, e.g. synthetic/Branin");
  auto* opt_optimizer =
      run->add_option("--optimizer", optimizer_name,
                      "one of gp_ei, rf_ei, tpe_ind, tpe_mv, random, llambo");
  auto* opt_warmstart =
      run->add_option("--warmstart", warmstart_name,
                      "one of random, sobol, lhc, llm_none, llm_partial, llm_full");
  auto* opt_n_init = run->add_option("--n-init", n_init, "warmstart evaluations per run");
  auto* opt_n_trials = run->add_option("--n-trials", n_trials, "optimization trials per run");
  auto* opt_n_runs = run->add_option("--n-runs", n_runs, "independent runs");
  auto* opt_seed = run->add_option("--seed", seed, "base seed");
  auto* opt_mc = run->add_option("--mc-samples", mc_samples, "surrogate samples per candidate");
  auto* opt_k = run->add_option("--k-candidates", k_candidates, "candidates per trial");
  run->add_option("--spec-json", spec_json, "load the experiment spec from a JSON file");
  run->add_option("--out", run_out, "output directory");
  run->add_flag("--serial", serial, "disable parallel execution");
  add_backend_flags(run, run_backend);

  // --- evaluate-surrogate ------------------------------------------------------
  auto* eval = app.add_subcommand("evaluate-surrogate",
                                  "score surrogates on held-out points per n_train");
  std::string eval_task = "synthetic/Sphere";
  SurrogateEvalSettings eval_settings;
  std::string eval_level = "full", eval_out = "out";
  BackendFlags eval_backend;
  eval->add_option("--task", eval_task, "task id");
  eval->add_option("--grid", eval_settings.grid, "training-set sizes")->delimiter(',');
  eval->add_option("--models", eval_settings.models, "of gp, rf, llm, llm_mc")->delimiter(',');
  eval->add_option("--seed", eval_settings.seed, "split seed");
  eval->add_option("--mc-samples", eval_settings.mc_samples, "samples for llm_mc");
  eval->add_option("--level", eval_level, "prompt context: full, partial, none");
  eval->add_option("--out", eval_out, "output directory");
  add_backend_flags(eval, eval_backend);

  // --- warmstart-study ---------------------------------------------------------
  auto* study = app.add_subcommand("warmstart-study", "design diversity per strategy");
  std::string study_task = "synthetic/Sphere";
  std::vector<std::string> study_strategies = {"random", "sobol", "lhc"};
  int study_n_init = 5, study_n_seeds = 50;
  std::uint64_t study_seed = 0;
  std::string study_out = "out";
  BackendFlags study_backend;
  study->add_option("--task", study_task, "task id");
  study->add_option("--strategies", study_strategies, "warmstart strategies")->delimiter(',');
  study->add_option("--n-init", study_n_init, "design size");
  study->add_option("--n-seeds", study_n_seeds, "replicates per strategy");
  study->add_option("--seed", study_seed, "base seed");
  study->add_option("--out", study_out, "output directory");
  add_backend_flags(study, study_backend);

  // --- ablation ----------------------------------------------------------------
  auto* ablation = app.add_subcommand("ablation",
                                      "paired surrogate reports, full vs none context");
  std::string abl_task = "synthetic/Sphere";
  SurrogateEvalSettings abl_settings;
  abl_settings.models = {"llm_mc"};
  std::string abl_out = "out";
  BackendFlags abl_backend;
  ablation->add_option("--task", abl_task, "task id");
  ablation->add_option("--grid", abl_settings.grid, "training-set sizes")->delimiter(',');
  ablation->add_option("--models", abl_settings.models, "of gp, rf, llm, llm_mc")
      ->delimiter(',');
  ablation->add_option("--seed", abl_settings.seed, "split seed");
  ablation->add_option("--mc-samples", abl_settings.mc_samples, "samples for llm_mc");
  ablation->add_option("--out", abl_out, "output directory");
  add_backend_flags(ablation, abl_backend);

  // --- aggregate -----------------------------------------------------------------
  auto* agg = app.add_subcommand("aggregate", "merge persisted suites into curve CSVs");
  std::vector<std::string> agg_in;
  std::string agg_out = "out", agg_norm = "per_task", agg_bounds;
  agg->add_option("--in", agg_in, "suite directories")->required()->delimiter(',');
  agg->add_option("--out", agg_out, "output directory");
  agg->add_option("--norm", agg_norm, "per_task or global");
  agg->add_option("--bounds", agg_bounds, "global-normalization bounds JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      ExperimentSpec spec;
      if (!spec_json.empty()) spec = ExperimentSpec::from_json(read_json_file(spec_json));
      // Explicit flags win over the JSON spec; without one the bound locals
      // already carry the defaults.
      if (spec_json.empty() || opt_task->count()) spec.task_id = task_id;
      if (spec_json.empty() || opt_optimizer->count())
        spec.optimizer = optimizer_from_string(optimizer_name);
      if (spec_json.empty() || opt_warmstart->count())
        spec.warmstart = warmstart_from_string(warmstart_name);
      if (spec_json.empty() || opt_n_init->count()) spec.n_init = n_init;
      if (spec_json.empty() || opt_n_trials->count()) spec.n_trials = n_trials;
      if (spec_json.empty() || opt_n_runs->count()) spec.n_runs = n_runs;
      if (spec_json.empty() || opt_seed->count()) spec.base_seed = seed;
      if (spec_json.empty() || opt_mc->count()) spec.mc_samples = mc_samples;
      if (spec_json.empty() || opt_k->count()) spec.k_candidates = k_candidates;
      if (const auto backend = run_backend.to_config()) spec.backend = backend;
      spec.validate();
      return cmd_run(spec, run_out, serial);
    }
    if (eval->parsed()) {
      eval_settings.level = context_level_from_string(eval_level);
      eval_settings.backend = eval_backend.to_config();
      return cmd_evaluate(find_task(eval_task), eval_settings, eval_out);
    }
    if (study->parsed()) {
      return cmd_warmstart_study(find_task(study_task), study_strategies, study_n_init,
                                 study_n_seeds, study_seed, study_backend.to_config(),
                                 study_out);
    }
    if (ablation->parsed()) {
      abl_settings.backend = abl_backend.to_config();
      return cmd_ablation(find_task(abl_task), abl_settings, abl_out);
    }
    if (agg->parsed()) {
      return cmd_aggregate(agg_in, agg_out, agg_norm, agg_bounds);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
