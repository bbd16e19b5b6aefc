#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "llambo/llm.hpp"
#include "llambo/metrics.hpp"

namespace llambo {

enum class Optimizer { gp_ei, rf_ei, tpe_ind, tpe_mv, random, llambo };
enum class Warmstart { random, sobol, lhc, llm_none, llm_partial, llm_full };

const char* to_string(Optimizer o);
const char* to_string(Warmstart w);
Optimizer optimizer_from_string(const std::string& s);
Warmstart warmstart_from_string(const std::string& s);

// Everything needed to reproduce one experiment: task, method, budget, seeds.
struct ExperimentSpec {
  std::string task_id = "synthetic/Branin";
  Optimizer optimizer = Optimizer::random;
  Warmstart warmstart = Warmstart::random;
  int n_init = 5;
  int n_trials = 25;
  int n_runs = 5;
  std::uint64_t base_seed = 0;
  std::optional<BackendConfig> backend;  // required for llambo / llm_* warmstart
  int mc_samples = 10;                   // surrogate queries per candidate
  int k_candidates = 10;                 // candidates requested per trial

  // "<optimizer>+<warmstart>", the method key used in aggregated outputs.
  std::string method_label() const;

  // Throws ValidationError on inconsistent settings (counts, missing backend).
  void validate() const;

  nlohmann::json to_json() const;
  static ExperimentSpec from_json(const nlohmann::json& doc);
};

// One evaluated configuration: the n_init warmstart points first, then one
// entry per optimization trial.
struct TrialEntry {
  int index = 0;        // 0-based position within the run
  Config config;
  double score = 0.0;   // raw task orientation
  Provenance provenance = Provenance::random;
  std::optional<PredictiveDistribution> pred;  // surrogate view, raw orientation
  bool fallback = false;        // config (or its whole batch) came from a fallback
  bool duplicate = false;       // warmstart point repeats an earlier one
  int retries = 0;              // corrective retries spent on this entry's queries
  int surrogate_fallbacks = 0;  // surrogate samples replaced by the history mean
  double wall_ms = 0.0;         // not persisted: replay must be byte-identical
};

struct RunRecord {
  ExperimentSpec spec;
  int run_index = 0;
  std::uint64_t seed = 0;  // mix_seed(base_seed, run_index)
  std::vector<Config> warmstart_configs;
  int warmstart_retries = 0;
  std::vector<TrialEntry> entries;
  RegretCurve curve;  // canonical orientation; known bounds else observed extrema
  bool failed = false;
  std::string fail_reason;
  std::vector<LlmExchange> llm_log;
};

// Warmstart (n_init evaluations) followed by n_trials propose/select/evaluate
// iterations; the history handed to trial t holds exactly the first
// n_init + t - 1 evaluations. An objective error yields a partial record with
// `failed` set instead of propagating.
RunRecord run_one(const ExperimentSpec& spec, int run_index, Exec exec = Exec::parallel);
RunRecord run_one(const ExperimentSpec& spec, const Task& task, int run_index,
                  Exec exec = Exec::parallel);

// n_runs records with distinct per-run seeds. Runs execute in parallel when the
// backend is absent or scripted (each run gets a fresh backend); live HTTP
// backends are driven sequentially.
std::vector<RunRecord> run_suite(const ExperimentSpec& spec, Exec exec = Exec::parallel);
std::vector<RunRecord> run_suite(const ExperimentSpec& spec, const Task& task,
                                 Exec exec = Exec::parallel);

// --- persistence -------------------------------------------------------------

// Writes spec.json, run_<i>.jsonl (meta line, then one line per entry), and
// llm_<i>.jsonl for runs with backend traffic. Wall times are excluded so the
// scripted backend replays to identical bytes.
void save_records(const std::string& out_dir, const ExperimentSpec& spec,
                  const std::vector<RunRecord>& records);

struct LoadedSuite {
  ExperimentSpec spec;
  std::vector<RunRecord> records;  // llm logs are not loaded back
};

LoadedSuite load_records(const std::string& dir);

// --- aggregation ---------------------------------------------------------------

enum class Normalization { per_task, global };

// Raw-orientation score bounds per task id, used by Normalization::global.
struct BoundsEntry {
  double best = 0.0;
  double worst = 0.0;
};
using BoundsMap = std::map<std::string, BoundsEntry>;

BoundsMap load_bounds(const std::string& path);

struct SuiteResult {
  ExperimentSpec spec;
  Direction direction = Direction::minimize;
  std::vector<RunRecord> records;
};

// Writes curves.csv (one row per task, method, trial, statistic) and
// warnings.csv (one row per failed run, excluded from the statistics).
// Mixed budgets across suites are an error; per_task bounds come from the union
// of observations over all records of the task, global bounds from `bounds`
// (falling back to the task's known range).
void aggregate_curves(const std::vector<SuiteResult>& suites, const std::string& out_dir,
                      Normalization norm = Normalization::per_task,
                      const BoundsMap* bounds = nullptr);

// surrogate_report.csv: one row per (model, n_train, metric).
void write_surrogate_csv(const std::vector<SurrogateReport>& reports, const std::string& path);

// --- surrogate evaluation --------------------------------------------------------

struct SurrogateEvalSettings {
  std::vector<int> grid = {5, 10, 20, 40};            // n_train values, each >= 2
  std::vector<std::string> models = {"gp", "rf"};     // of {gp, rf, llm, llm_mc}
  std::uint64_t seed = 0;
  std::optional<BackendConfig> backend;               // required for llm models
  int mc_samples = 10;
  ContextLevel level = ContextLevel::full;
  PromptTemplates templates = PromptTemplates::defaults();
  Exec exec = Exec::parallel;
};

// For each grid value: sample n_train + 50 configs, fit every model on the
// train split, score the held-out 50 with all five metrics (canonical
// orientation). Splits depend only on (task, grid, seed), so reports from
// different models or context levels pair up by split_id. Cells where a metric
// is undefined or a fit fails come back flagged degenerate with NaN metrics.
std::vector<SurrogateReport> evaluate_surrogates(const Task& task,
                                                 const SurrogateEvalSettings& settings);

struct AblationPair {
  SurrogateReport full;
  SurrogateReport none;
};

// evaluate_surrogates twice (ContextLevel::full vs none) on identical splits;
// rows are paired by (model, split_id).
std::vector<AblationPair> ablation_compare(const Task& task,
                                           const SurrogateEvalSettings& settings);

// --- warmstart design study -------------------------------------------------------

struct WarmstartStudyRow {
  std::string strategy;
  double mean_gen_variance = 0.0;
  double mean_abs_corr = 0.0;
};

// Mean design-diversity statistics over n_seeds independent designs of n_init
// points per strategy. LLM strategies need a backend.
std::vector<WarmstartStudyRow> warmstart_study(const Task& task,
                                               const std::vector<Warmstart>& strategies,
                                               int n_init, int n_seeds, std::uint64_t base_seed,
                                               const std::optional<BackendConfig>& backend,
                                               const PromptTemplates& templates);

void write_warmstart_csv(const std::vector<WarmstartStudyRow>& rows, const std::string& path);

}  // namespace llambo
