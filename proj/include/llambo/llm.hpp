#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "llambo/acquire.hpp"
#include "llambo/bench.hpp"

namespace llambo {

// Context ablation: `none` hides the dataset card and replaces parameter names
// by X1..Xd; `partial` keeps names and statistics but drops the free-text
// descriptions; `full` includes everything.
enum class ContextLevel { full, partial, none };
const char* to_string(ContextLevel level);
ContextLevel context_level_from_string(const std::string& s);

enum class ReplySchema { config, config_list, score };

struct PromptBundle {
  std::string system_text;
  std::string user_text;
  ReplySchema expected_schema = ReplySchema::config;
};

struct BackendConfig {
  std::string endpoint = "http://127.0.0.1:11434";
  std::string model = "llama3.1:70b";
  double temperature = 0.7;
  int max_retries = 2;
  int timeout_seconds = 30;
  // Non-empty selects the scripted backend: the path of a JSON fixture file
  // {"replies": ["...", ...], "cycle": false}.
  std::string scripted_replies;
};

class Backend {
 public:
  virtual ~Backend() = default;
  // Returns the raw completion text. Throws BackendError on transport or
  // server failures.
  virtual std::string complete(const PromptBundle& bundle, double temperature,
                               std::uint64_t seed) = 0;
};

// Replays a fixed queue of replies; prompts, temperature, and seed are
// ignored. Exhausting the queue throws unless `cycle` wraps it around.
class ScriptedBackend : public Backend {
 public:
  explicit ScriptedBackend(std::vector<std::string> replies, bool cycle = false);
  static ScriptedBackend from_file(const std::string& path);

  std::string complete(const PromptBundle& bundle, double temperature,
                       std::uint64_t seed) override;
  int calls() const { return calls_; }

 private:
  std::vector<std::string> replies_;
  bool cycle_ = false;
  std::size_t index_ = 0;
  int calls_ = 0;
};

// Talks to a local model server's JSON completion route (POST /api/generate,
// stream disabled, one request per query).
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(BackendConfig cfg);
  std::string complete(const PromptBundle& bundle, double temperature,
                       std::uint64_t seed) override;

 private:
  BackendConfig cfg_;
};

std::unique_ptr<Backend> make_backend(const BackendConfig& cfg);

// Plain-text prompt templates with {placeholder} substitution, so the context
// ablation edits data rather than code. load_dir falls back to the compiled-in
// default for any missing file.
struct PromptTemplates {
  std::string system;
  std::string warmstart;
  std::string candidates;
  std::string surrogate;

  static const PromptTemplates& defaults();
  static PromptTemplates load_dir(const std::string& dir);

  bool operator==(const PromptTemplates&) const = default;
};

// One line per observation:
//   performance: <score>, hyperparameters: {<name>: <value>, ...}
// Scores use 6 significant digits; parameter order follows the space; names
// are aliased to X1..Xd at ContextLevel::none.
std::string serialize_history(const SearchSpace& space, const History& history,
                              ContextLevel level);

// The space with parameter names replaced by X1..Xd (positional).
SearchSpace aliased_space(const SearchSpace& space);

// Maps a config parsed against aliased_space(space) back to real names.
Config unalias_config(const SearchSpace& space, const Config& aliased);

PromptBundle build_warmstart_prompt(const Task& task, ContextLevel level,
                                    const std::vector<Config>& already,
                                    const PromptTemplates& templates);
// Throws ValidationError on empty history.
PromptBundle build_candidate_prompt(const Task& task, const History& history, ContextLevel level,
                                    int k, const PromptTemplates& templates);
PromptBundle build_surrogate_prompt(const Task& task, const History& history,
                                    const Config& candidate, ContextLevel level,
                                    const PromptTemplates& templates);

struct ParsedReply {
  std::vector<Config> configs;  // one entry for config, k entries for config_list
  double score = 0.0;           // set for the score schema
};

// Strict parsing: extracts the first JSON value in the text (tolerating prose
// and code fences), validates keys and bounds against the space, coerces
// numeric strings, and never clamps. expected_count checks config_list arity
// when >= 0. Throws ParseError.
ParsedReply parse_response(const std::string& text, ReplySchema schema, const SearchSpace& space,
                           int expected_count = -1);

struct LenientConfigList {
  std::vector<Config> valid;
  int invalid = 0;
  bool found_array = false;
  std::string first_error;
};

// Salvages as many valid configs as possible (up to max_keep) from a reply,
// scanning loose objects when no JSON array is present. Never throws.
LenientConfigList parse_config_list_lenient(const std::string& text, const SearchSpace& space,
                                            int max_keep);

// Audit record of one backend call (or its terminal fallback).
struct LlmExchange {
  std::string stage;  // "warmstart" | "candidates" | "surrogate"
  std::string system_text;
  std::string user_text;
  std::string raw_reply;
  bool ok = false;
  std::string error;
  bool fallback = false;  // set on the last exchange when the stage fell back
  int attempt = 0;
};

struct RobustResult {
  ParsedReply reply;
  bool fallback = false;
  int retries = 0;  // attempts beyond the first
};

using FallbackFn = std::function<ParsedReply(std::uint64_t seed)>;

// Query + parse with up to cfg.max_retries corrective retries (the retry
// prompt embeds the previous error message); exhaustion returns the fallback
// sampler's output tagged as fallback. At most max_retries + 1 backend calls.
RobustResult robust_ask(Backend& backend, const BackendConfig& cfg, const PromptBundle& bundle,
                        const SearchSpace& space, const std::string& stage, double temperature,
                        int expected_count, const FallbackFn& fallback, std::uint64_t seed,
                        std::vector<LlmExchange>* log);

struct WarmstartResult {
  std::vector<Config> configs;
  std::vector<bool> duplicate;  // config equals an earlier warmstart config
  std::vector<bool> fallback;   // config came from the random fallback
  int retries = 0;              // total corrective retries across queries
};

// n_init sequential warmstart queries; each prompt lists the previously
// proposed points to encourage diversity. Duplicates are kept but flagged.
WarmstartResult llm_warmstart(Backend& backend, const BackendConfig& cfg, const Task& task,
                              ContextLevel level, int n_init, std::uint64_t seed,
                              const PromptTemplates& templates, std::vector<LlmExchange>* log);

struct ProposeResult {
  CandidateBatch batch;
  int invalid = 0;        // reply entries rejected by validation
  int topped_up = 0;      // random configs appended to reach k
  bool fallback = false;  // no usable reply: the whole batch is random
};

// One candidate-prompt query, leniently salvaged; under-filled batches are
// topped up with random configs. No dedup against history.
ProposeResult llm_propose(Backend& backend, const BackendConfig& cfg, const Task& task,
                          const History& history, ContextLevel level, int k, std::uint64_t seed,
                          const PromptTemplates& templates, std::vector<LlmExchange>* log);

struct SurrogateResult {
  PredictiveDistribution pred;  // in the task's raw metric orientation
  int fallbacks = 0;            // samples replaced by the history mean
  int retries = 0;
};

// Discriminative surrogate: mc_samples independent score queries (temperature
// cfg.temperature when mc_samples > 1, else 0), aggregated into mean and
// sample std (floor 1e-6). mc_samples = 1 uses a declared constant prior width.
SurrogateResult llm_surrogate_predict(Backend& backend, const BackendConfig& cfg, const Task& task,
                                      const History& history, const Config& candidate,
                                      ContextLevel level, int mc_samples, std::uint64_t seed,
                                      const PromptTemplates& templates,
                                      std::vector<LlmExchange>* log);

// Predictive std used when a single-shot surrogate cannot estimate spread.
inline constexpr double kSingleShotPriorStd = 0.1;

}  // namespace llambo
