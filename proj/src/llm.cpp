#include <cmath>
#include <numeric>

#include "llambo/llm.hpp"

namespace llambo {

namespace {

constexpr std::uint64_t kFallbackTag = 0xFB;

// The space replies are parsed against: aliased names at level none, so the
// model's X1..Xd keys resolve; callers map configs back with unalias_config.
SearchSpace effective_space(const SearchSpace& space, ContextLevel level) {
  return level == ContextLevel::none ? aliased_space(space) : space;
}

Config to_real_names(const SearchSpace& space, ContextLevel level, const Config& config) {
  return level == ContextLevel::none ? unalias_config(space, config) : config;
}

double history_mean(const History& history) {
  double acc = 0.0;
  for (const Observation& obs : history) acc += obs.score;
  return acc / static_cast<double>(history.size());
}

}  // namespace

RobustResult robust_ask(Backend& backend, const BackendConfig& cfg, const PromptBundle& bundle,
                        const SearchSpace& space, const std::string& stage, double temperature,
                        int expected_count, const FallbackFn& fallback, std::uint64_t seed,
                        std::vector<LlmExchange>* log) {
  std::string user_text = bundle.user_text;
  const int attempts = cfg.max_retries + 1;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    LlmExchange exchange;
    exchange.stage = stage;
    exchange.system_text = bundle.system_text;
    exchange.user_text = user_text;
    exchange.attempt = attempt;

    std::string error;
    try {
      const PromptBundle attempt_bundle{bundle.system_text, user_text, bundle.expected_schema};
      exchange.raw_reply =
          backend.complete(attempt_bundle, temperature, mix_seed(seed, attempt));
      RobustResult result;
      result.reply =
          parse_response(exchange.raw_reply, bundle.expected_schema, space, expected_count);
      result.retries = attempt;
      exchange.ok = true;
      if (log) log->push_back(std::move(exchange));
      return result;
    } catch (const ParseError& e) {
      error = e.what();
    } catch (const BackendError& e) {
      error = e.what();
    }
    exchange.error = error;
    if (log) log->push_back(std::move(exchange));
    user_text = bundle.user_text + "\n\nYour previous reply was invalid (" + error +
                "). Answer again, following the required format exactly.";
  }

  RobustResult result;
  result.reply = fallback(mix_seed(seed, kFallbackTag));
  result.fallback = true;
  result.retries = attempts - 1;
  if (log && !log->empty()) log->back().fallback = true;
  return result;
}

WarmstartResult llm_warmstart(Backend& backend, const BackendConfig& cfg, const Task& task,
                              ContextLevel level, int n_init, std::uint64_t seed,
                              const PromptTemplates& templates, std::vector<LlmExchange>* log) {
  if (n_init < 1)
    throw ValidationError("llm_warmstart requires n_init >= 1, got " + std::to_string(n_init));
  const SearchSpace& space = task.space();
  const SearchSpace parse_space = effective_space(space, level);

  WarmstartResult result;
  for (int i = 0; i < n_init; ++i) {
    const PromptBundle bundle = build_warmstart_prompt(task, level, result.configs, templates);
    const FallbackFn fallback = [&parse_space](std::uint64_t s) {
      ParsedReply reply;
      reply.configs = sample_random(parse_space, 1, s);
      return reply;
    };
    const RobustResult rr = robust_ask(backend, cfg, bundle, parse_space, "warmstart",
                                       cfg.temperature, -1, fallback, mix_seed(seed, i), log);
    const Config config = to_real_names(space, level, rr.reply.configs.at(0));
    const bool duplicate =
        std::find(result.configs.begin(), result.configs.end(), config) != result.configs.end();
    result.configs.push_back(config);
    result.duplicate.push_back(duplicate);
    result.fallback.push_back(rr.fallback);
    result.retries += rr.retries;
  }
  return result;
}

ProposeResult llm_propose(Backend& backend, const BackendConfig& cfg, const Task& task,
                          const History& history, ContextLevel level, int k, std::uint64_t seed,
                          const PromptTemplates& templates, std::vector<LlmExchange>* log) {
  const PromptBundle bundle = build_candidate_prompt(task, history, level, k, templates);
  const SearchSpace& space = task.space();
  const SearchSpace parse_space = effective_space(space, level);

  ProposeResult result;
  LlmExchange exchange;
  exchange.stage = "candidates";
  exchange.system_text = bundle.system_text;
  exchange.user_text = bundle.user_text;

  LenientConfigList parsed;
  try {
    exchange.raw_reply = backend.complete(bundle, cfg.temperature, mix_seed(seed, 0));
    parsed = parse_config_list_lenient(exchange.raw_reply, parse_space, k);
    result.invalid = parsed.invalid;
    exchange.ok = !parsed.valid.empty();
    exchange.error = parsed.first_error;
  } catch (const BackendError& e) {
    exchange.error = e.what();
  }

  for (const Config& config : parsed.valid)
    result.batch.configs.push_back(to_real_names(space, level, config));

  result.topped_up = k - static_cast<int>(result.batch.configs.size());
  result.fallback = result.batch.configs.empty();
  exchange.fallback = result.fallback;
  if (log) log->push_back(std::move(exchange));

  if (result.topped_up > 0) {
    const CandidateBatch filler = propose_random(space, result.topped_up, mix_seed(seed, kFallbackTag));
    result.batch.configs.insert(result.batch.configs.end(), filler.configs.begin(),
                                filler.configs.end());
  }
  result.batch.provenance = result.fallback ? Provenance::random : Provenance::llm;
  return result;
}

SurrogateResult llm_surrogate_predict(Backend& backend, const BackendConfig& cfg, const Task& task,
                                      const History& history, const Config& candidate,
                                      ContextLevel level, int mc_samples, std::uint64_t seed,
                                      const PromptTemplates& templates,
                                      std::vector<LlmExchange>* log) {
  if (mc_samples < 1)
    throw ValidationError("llm_surrogate_predict requires mc_samples >= 1, got " +
                          std::to_string(mc_samples));
  const PromptBundle bundle = build_surrogate_prompt(task, history, candidate, level, templates);
  const SearchSpace parse_space = effective_space(task.space(), level);
  const double temperature = mc_samples > 1 ? cfg.temperature : 0.0;
  const double prior_mean = history_mean(history);

  SurrogateResult result;
  std::vector<double> samples;
  samples.reserve(static_cast<std::size_t>(mc_samples));
  for (int s = 0; s < mc_samples; ++s) {
    const FallbackFn fallback = [prior_mean](std::uint64_t) {
      ParsedReply reply;
      reply.score = prior_mean;
      return reply;
    };
    const RobustResult rr = robust_ask(backend, cfg, bundle, parse_space, "surrogate",
                                       temperature, -1, fallback, mix_seed(seed, s), log);
    samples.push_back(rr.reply.score);
    if (rr.fallback) ++result.fallbacks;
    result.retries += rr.retries;
  }

  const double n = static_cast<double>(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  result.pred.mean = mean;
  if (mc_samples == 1) {
    result.pred.std = kSingleShotPriorStd;
  } else {
    double ss = 0.0;
    for (double v : samples) ss += (v - mean) * (v - mean);
    result.pred.std = std::max(std::sqrt(ss / (n - 1.0)), 1e-6);
  }
  return result;
}

}  // namespace llambo
