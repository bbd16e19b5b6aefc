#include "llambo/harness.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <limits>
#include <memory>
#include <utility>

namespace llambo {

namespace {

constexpr int kPoolSize = 512;   // random candidates scored by the model-based optimizers
constexpr int kForestTrees = 64;
constexpr double kTpeGamma = 0.25;
constexpr int kTestPoints = 50;  // held-out points per surrogate-evaluation split

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
      .count();
}

bool uses_llm_warmstart(Warmstart w) {
  return w == Warmstart::llm_none || w == Warmstart::llm_partial || w == Warmstart::llm_full;
}

ContextLevel warmstart_level(Warmstart w) {
  switch (w) {
    case Warmstart::llm_none: return ContextLevel::none;
    case Warmstart::llm_partial: return ContextLevel::partial;
    default: return ContextLevel::full;
  }
}

}  // namespace

const char* to_string(Optimizer o) {
  switch (o) {
    case Optimizer::gp_ei: return "gp_ei";
    case Optimizer::rf_ei: return "rf_ei";
    case Optimizer::tpe_ind: return "tpe_ind";
    case Optimizer::tpe_mv: return "tpe_mv";
    case Optimizer::random: return "random";
    case Optimizer::llambo: return "llambo";
  }
  return "unknown";
}

const char* to_string(Warmstart w) {
  switch (w) {
    case Warmstart::random: return "random";
    case Warmstart::sobol: return "sobol";
    case Warmstart::lhc: return "lhc";
    case Warmstart::llm_none: return "llm_none";
    case Warmstart::llm_partial: return "llm_partial";
    case Warmstart::llm_full: return "llm_full";
  }
  return "unknown";
}

Optimizer optimizer_from_string(const std::string& s) {
  if (s == "gp_ei") return Optimizer::gp_ei;
  if (s == "rf_ei") return Optimizer::rf_ei;
  if (s == "tpe_ind") return Optimizer::tpe_ind;
  if (s == "tpe_mv") return Optimizer::tpe_mv;
  if (s == "random") return Optimizer::random;
  if (s == "llambo") return Optimizer::llambo;
  throw ValidationError("unknown optimizer '" + s + "'");
}

Warmstart warmstart_from_string(const std::string& s) {
  if (s == "random") return Warmstart::random;
  if (s == "sobol") return Warmstart::sobol;
  if (s == "lhc") return Warmstart::lhc;
  if (s == "llm_none") return Warmstart::llm_none;
  if (s == "llm_partial") return Warmstart::llm_partial;
  if (s == "llm_full") return Warmstart::llm_full;
  throw ValidationError("unknown warmstart strategy '" + s + "'");
}

std::string ExperimentSpec::method_label() const {
  return std::string(to_string(optimizer)) + "+" + to_string(warmstart);
}

void ExperimentSpec::validate() const {
  if (task_id.empty()) throw ValidationError("spec: task id is empty");
  if (n_init < 1) throw ValidationError("spec: n_init must be >= 1");
  if (n_trials < 0) throw ValidationError("spec: n_trials must be >= 0");
  if (n_runs < 1) throw ValidationError("spec: n_runs must be >= 1");
  if (mc_samples < 1) throw ValidationError("spec: mc_samples must be >= 1");
  if (k_candidates < 1) throw ValidationError("spec: k_candidates must be >= 1");
  if ((optimizer == Optimizer::llambo || uses_llm_warmstart(warmstart)) && !backend)
    throw ValidationError("spec: " + method_label() + " requires a backend");
}

nlohmann::json ExperimentSpec::to_json() const {
  nlohmann::json j{{"task", task_id},
                   {"optimizer", to_string(optimizer)},
                   {"warmstart", to_string(warmstart)},
                   {"n_init", n_init},
                   {"n_trials", n_trials},
                   {"n_runs", n_runs},
                   {"base_seed", base_seed},
                   {"mc_samples", mc_samples},
                   {"k_candidates", k_candidates}};
  if (backend) {
    j["backend"] = {{"endpoint", backend->endpoint},
                    {"model", backend->model},
                    {"temperature", backend->temperature},
                    {"max_retries", backend->max_retries},
                    {"timeout_seconds", backend->timeout_seconds},
                    {"scripted_replies", backend->scripted_replies}};
  }
  return j;
}

ExperimentSpec ExperimentSpec::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw SchemaError("experiment spec: expected a JSON object");
  try {
    ExperimentSpec s;
    s.task_id = doc.value("task", s.task_id);
    if (doc.contains("optimizer"))
      s.optimizer = optimizer_from_string(doc.at("optimizer").get<std::string>());
    if (doc.contains("warmstart"))
      s.warmstart = warmstart_from_string(doc.at("warmstart").get<std::string>());
    s.n_init = doc.value("n_init", s.n_init);
    s.n_trials = doc.value("n_trials", s.n_trials);
    s.n_runs = doc.value("n_runs", s.n_runs);
    s.base_seed = doc.value("base_seed", s.base_seed);
    s.mc_samples = doc.value("mc_samples", s.mc_samples);
    s.k_candidates = doc.value("k_candidates", s.k_candidates);
    if (doc.contains("backend") && !doc.at("backend").is_null()) {
      BackendConfig b;
      const auto& jb = doc.at("backend");
      b.endpoint = jb.value("endpoint", b.endpoint);
      b.model = jb.value("model", b.model);
      b.temperature = jb.value("temperature", b.temperature);
      b.max_retries = jb.value("max_retries", b.max_retries);
      b.timeout_seconds = jb.value("timeout_seconds", b.timeout_seconds);
      b.scripted_replies = jb.value("scripted_replies", b.scripted_replies);
      s.backend = std::move(b);
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("experiment spec: ") + e.what());
  }
}

RunRecord run_one(const ExperimentSpec& spec, const Task& task, int run_index, Exec exec) {
  spec.validate();

  RunRecord rec;
  rec.spec = spec;
  rec.run_index = run_index;
  rec.seed = mix_seed(spec.base_seed, static_cast<std::uint64_t>(run_index));
  rec.entries.reserve(static_cast<std::size_t>(spec.n_init + spec.n_trials));

  const SearchSpace& space = task.space();
  const PromptTemplates& templates = PromptTemplates::defaults();
  const BackendConfig bc = spec.backend.value_or(BackendConfig{});
  std::unique_ptr<Backend> backend;
  if (spec.backend) backend = make_backend(*spec.backend);

  // The llambo prompts inherit the warmstart's context level; classical
  // warmstarts leave the loop fully informed.
  const ContextLevel level = warmstart_level(spec.warmstart);

  History history;                 // raw task orientation
  std::vector<double> canon;      // canonical (minimization) scores
  std::vector<UnitPoint> points;  // normalized configs, aligned with history

  auto finalize = [&]() -> RunRecord {
    if (!canon.empty()) {
      double y_best, y_worst;
      if (task.known_best && task.known_worst) {
        y_best = task.canonical(*task.known_best);
        y_worst = task.canonical(*task.known_worst);
      } else {
        const auto [lo, hi] = std::minmax_element(canon.begin(), canon.end());
        y_best = *lo;
        y_worst = *hi;
      }
      rec.curve = regret_curve(canon, y_best, y_worst);
    }
    return std::move(rec);
  };

  auto evaluate_entry = [&](TrialEntry e, std::chrono::steady_clock::time_point t0) -> bool {
    try {
      e.score = eval_objective(task, e.config);
    } catch (const Error& err) {
      rec.failed = true;
      rec.fail_reason = err.what();
      return false;
    }
    e.wall_ms = elapsed_ms(t0);
    history.push_back({e.config, e.score});
    canon.push_back(task.canonical(e.score));
    points.push_back(normalize(space, e.config));
    rec.entries.push_back(std::move(e));
    return true;
  };

  // --- warmstart: n_init evaluations ------------------------------------------
  {
    const std::uint64_t ws_seed = mix_seed(rec.seed, 0xA1);
    std::vector<Config> ws;
    std::vector<bool> dup, fb;
    Provenance prov = Provenance::random;
    if (uses_llm_warmstart(spec.warmstart)) {
      WarmstartResult r = llm_warmstart(*backend, bc, task, level, spec.n_init, ws_seed,
                                        templates, &rec.llm_log);
      ws = std::move(r.configs);
      dup = std::move(r.duplicate);
      fb = std::move(r.fallback);
      rec.warmstart_retries = r.retries;
      prov = Provenance::llm;
    } else {
      ws = spec.warmstart == Warmstart::sobol ? sample_sobol(space, spec.n_init, ws_seed)
           : spec.warmstart == Warmstart::lhc ? sample_lhc(space, spec.n_init, ws_seed)
                                              : sample_random(space, spec.n_init, ws_seed);
      dup.assign(ws.size(), false);
      fb.assign(ws.size(), false);
      for (std::size_t i = 1; i < ws.size(); ++i)
        dup[i] = std::find(ws.begin(), ws.begin() + static_cast<std::ptrdiff_t>(i), ws[i]) !=
                 ws.begin() + static_cast<std::ptrdiff_t>(i);
    }
    rec.warmstart_configs = ws;
    for (std::size_t i = 0; i < ws.size(); ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      TrialEntry e;
      e.index = static_cast<int>(i);
      e.config = ws[i];
      e.provenance = prov;
      e.fallback = fb[i];
      e.duplicate = dup[i];
      if (!evaluate_entry(std::move(e), t0)) return finalize();
    }
  }

  // --- optimization trials -------------------------------------------------------
  for (int t = 0; t < spec.n_trials; ++t) {
    const std::uint64_t trial_seed = mix_seed(rec.seed, 0xB000 + static_cast<std::uint64_t>(t));
    const double best = *std::min_element(canon.begin(), canon.end());
    const auto t0 = std::chrono::steady_clock::now();
    TrialEntry e;
    e.index = spec.n_init + t;

    switch (spec.optimizer) {
      case Optimizer::random: {
        e.config = sample_random(space, 1, mix_seed(trial_seed, 1))[0];
        break;
      }
      case Optimizer::gp_ei:
      case Optimizer::rf_ei: {
        const CandidateBatch pool = propose_random(space, kPoolSize, mix_seed(trial_seed, 1));
        Selection sel;
        if (spec.optimizer == Optimizer::gp_ei) {
          const GpModel model = gp_fit(points, canon, trial_seed, exec);
          sel = select_next(
              pool, [&](const Config& c) { return gp_predict(model, normalize(space, c)); },
              best, exec);
        } else {
          const ForestModel model = forest_fit(points, canon, kForestTrees, trial_seed, exec);
          sel = select_next(
              pool, [&](const Config& c) { return forest_predict(model, normalize(space, c)); },
              best, exec);
        }
        e.config = sel.config;
        e.pred = PredictiveDistribution{task.canonical(sel.pred.mean), sel.pred.std};
        break;
      }
      case Optimizer::tpe_ind:
      case Optimizer::tpe_mv: {
        const TpeMode mode =
            spec.optimizer == Optimizer::tpe_ind ? TpeMode::independent : TpeMode::multivariate;
        if (canon.size() >= 4) {
          const TpeModel model = tpe_fit(points, canon, kTpeGamma, mode, trial_seed);
          // k = 1: draw the reference default of 24 ratio-ranked candidates
          // and keep the best. spec.k_candidates sizes the LLM path only;
          // widening the TPE draw pool over-exploits the density ratio.
          const CandidateBatch batch = propose_tpe(space, model, 1, mix_seed(trial_seed, 1), exec);
          e.config = batch.configs.front();
          e.provenance = batch.provenance;
        } else {
          e.config = sample_random(space, 1, mix_seed(trial_seed, 1))[0];
        }
        break;
      }
      case Optimizer::llambo: {
        ProposeResult pr = llm_propose(*backend, bc, task, history, level, spec.k_candidates,
                                       mix_seed(trial_seed, 2), templates, &rec.llm_log);
        const std::size_t n = pr.batch.configs.size();
        std::vector<PredictiveDistribution> raw(n), canonical(n);
        for (std::size_t i = 0; i < n; ++i) {
          SurrogateResult sr = llm_surrogate_predict(
              *backend, bc, task, history, pr.batch.configs[i], level, spec.mc_samples,
              mix_seed(trial_seed, 0xC00 + static_cast<std::uint64_t>(i)), templates,
              &rec.llm_log);
          raw[i] = sr.pred;
          canonical[i] = {task.canonical(sr.pred.mean), sr.pred.std};
          e.surrogate_fallbacks += sr.fallbacks;
          e.retries += sr.retries;
        }
        CandidateBatch scored = std::move(pr.batch);
        scored.scores_est = std::move(canonical);
        const Selection sel = select_next(scored, {}, best, exec);
        e.config = sel.config;
        e.provenance = scored.provenance;
        e.pred = raw[static_cast<std::size_t>(sel.index)];
        e.fallback = pr.fallback;
        break;
      }
    }
    if (!evaluate_entry(std::move(e), t0)) break;
  }
  return finalize();
}

RunRecord run_one(const ExperimentSpec& spec, int run_index, Exec exec) {
  return run_one(spec, find_task(spec.task_id), run_index, exec);
}

std::vector<RunRecord> run_suite(const ExperimentSpec& spec, const Task& task, Exec exec) {
  spec.validate();
  std::vector<RunRecord> records(static_cast<std::size_t>(spec.n_runs));
  const bool live_backend = spec.backend && spec.backend->scripted_replies.empty();
  if (exec == Exec::serial || live_backend) {
    for (int i = 0; i < spec.n_runs; ++i)
      records[static_cast<std::size_t>(i)] = run_one(spec, task, i, exec);
    return records;
  }
  std::vector<std::exception_ptr> errors(records.size());
  parallel_for(exec, spec.n_runs, [&](std::ptrdiff_t i) {
    try {
      records[static_cast<std::size_t>(i)] = run_one(spec, task, static_cast<int>(i), Exec::serial);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  });
  for (const auto& err : errors)
    if (err) std::rethrow_exception(err);
  return records;
}

std::vector<RunRecord> run_suite(const ExperimentSpec& spec, Exec exec) {
  return run_suite(spec, find_task(spec.task_id), exec);
}

std::vector<SurrogateReport> evaluate_surrogates(const Task& task,
                                                 const SurrogateEvalSettings& s) {
  if (s.grid.empty()) throw ValidationError("surrogate evaluation: empty grid");
  for (int n : s.grid)
    if (n < 2) throw ValidationError("surrogate evaluation: grid values must be >= 2");
  if (s.models.empty()) throw ValidationError("surrogate evaluation: no models selected");
  if (s.mc_samples < 1) throw ValidationError("surrogate evaluation: mc_samples must be >= 1");
  bool needs_backend = false;
  for (const std::string& m : s.models) {
    if (m == "llm" || m == "llm_mc") {
      needs_backend = true;
    } else if (m != "gp" && m != "rf") {
      throw ValidationError("surrogate evaluation: unknown model '" + m + "'");
    }
  }
  if (needs_backend && !s.backend)
    throw ValidationError("surrogate evaluation: llm models require a backend");

  const SearchSpace& space = task.space();
  const BackendConfig bc = s.backend.value_or(BackendConfig{});
  std::unique_ptr<Backend> backend;
  if (s.backend) backend = make_backend(*s.backend);

  std::vector<SurrogateReport> out;
  out.reserve(s.grid.size() * s.models.size());
  for (std::size_t g = 0; g < s.grid.size(); ++g) {
    const int n_train = s.grid[g];
    // The split depends on (task space, grid slot, seed) only, so reports from
    // different models and context levels pair up exactly.
    const std::uint64_t split_seed = mix_seed(s.seed, 0x5e00 + g);
    const std::vector<Config> configs = sample_random(space, n_train + kTestPoints, split_seed);

    History train_hist;
    std::vector<UnitPoint> x_train, x_test;
    std::vector<double> y_train, y_test;
    std::vector<Config> test_configs;
    for (std::size_t i = 0; i < configs.size(); ++i) {
      const double raw = eval_objective(task, configs[i]);
      if (static_cast<int>(i) < n_train) {
        train_hist.push_back({configs[i], raw});
        x_train.push_back(normalize(space, configs[i]));
        y_train.push_back(task.canonical(raw));
      } else {
        test_configs.push_back(configs[i]);
        x_test.push_back(normalize(space, configs[i]));
        y_test.push_back(task.canonical(raw));
      }
    }

    for (const std::string& name : s.models) {
      SurrogateReport rep;
      rep.model = name;
      rep.n_train = n_train;
      rep.split_id = static_cast<int>(g);
      try {
        std::vector<PredictiveDistribution> preds;
        if (name == "gp") {
          const GpModel model = gp_fit(x_train, y_train, mix_seed(split_seed, 0xF17), s.exec);
          preds = gp_predict_batch(model, x_test, s.exec);
        } else if (name == "rf") {
          const ForestModel model =
              forest_fit(x_train, y_train, kForestTrees, mix_seed(split_seed, 0xF17), s.exec);
          preds.reserve(x_test.size());
          for (const UnitPoint& u : x_test) preds.push_back(forest_predict(model, u));
        } else {
          const int mc = name == "llm" ? 1 : s.mc_samples;
          preds.reserve(test_configs.size());
          for (std::size_t i = 0; i < test_configs.size(); ++i) {
            SurrogateResult sr = llm_surrogate_predict(
                *backend, bc, task, train_hist, test_configs[i], s.level, mc,
                mix_seed(split_seed, 0xC00 + i), s.templates, nullptr);
            preds.push_back({task.canonical(sr.pred.mean), sr.pred.std});
          }
        }
        std::vector<double> means(preds.size());
        for (std::size_t i = 0; i < preds.size(); ++i) means[i] = preds[i].mean;
        rep.nrmse = nrmse(y_test, means);
        rep.r2 = r_squared(y_test, means);
        double total = 0.0;
        for (std::size_t i = 0; i < preds.size(); ++i) total += nlpd(preds[i], y_test[i]);
        rep.nlpd_mean = total / static_cast<double>(preds.size());
        const Calibration cal = calibration(preds, y_test);
        rep.coverage = cal.coverage;
        rep.sharpness = cal.sharpness;
      } catch (const Error&) {
        rep.degenerate = true;
        rep.nrmse = rep.r2 = rep.nlpd_mean = rep.coverage = rep.sharpness =
            std::numeric_limits<double>::quiet_NaN();
      }
      out.push_back(std::move(rep));
    }
  }
  return out;
}

std::vector<AblationPair> ablation_compare(const Task& task,
                                           const SurrogateEvalSettings& settings) {
  SurrogateEvalSettings informed = settings;
  informed.level = ContextLevel::full;
  SurrogateEvalSettings blinded = settings;
  blinded.level = ContextLevel::none;
  const std::vector<SurrogateReport> full = evaluate_surrogates(task, informed);
  const std::vector<SurrogateReport> none = evaluate_surrogates(task, blinded);
  std::vector<AblationPair> out;
  out.reserve(full.size());
  for (std::size_t i = 0; i < full.size(); ++i) out.push_back({full[i], none[i]});
  return out;
}

std::vector<WarmstartStudyRow> warmstart_study(const Task& task,
                                               const std::vector<Warmstart>& strategies,
                                               int n_init, int n_seeds, std::uint64_t base_seed,
                                               const std::optional<BackendConfig>& backend_cfg,
                                               const PromptTemplates& templates) {
  if (n_init < 2) throw ValidationError("warmstart study: n_init must be >= 2");
  if (n_seeds < 1) throw ValidationError("warmstart study: n_seeds must be >= 1");
  if (strategies.empty()) throw ValidationError("warmstart study: no strategies");

  const SearchSpace& space = task.space();
  const BackendConfig bc = backend_cfg.value_or(BackendConfig{});

  std::vector<WarmstartStudyRow> rows;
  rows.reserve(strategies.size());
  for (Warmstart w : strategies) {
    std::unique_ptr<Backend> backend;
    if (uses_llm_warmstart(w)) {
      if (!backend_cfg) throw ValidationError("warmstart study: llm strategies require a backend");
      backend = make_backend(*backend_cfg);
    }
    double sum_gv = 0.0, sum_corr = 0.0;
    for (int i = 0; i < n_seeds; ++i) {
      // The same per-replicate seed is shared by all strategies (paired design).
      const std::uint64_t seed = mix_seed(base_seed, static_cast<std::uint64_t>(i));
      std::vector<Config> design;
      switch (w) {
        case Warmstart::random: design = sample_random(space, n_init, seed); break;
        case Warmstart::sobol: design = sample_sobol(space, n_init, seed); break;
        case Warmstart::lhc: design = sample_lhc(space, n_init, seed); break;
        default:
          design = llm_warmstart(*backend, bc, task, warmstart_level(w), n_init, seed,
                                 templates, nullptr)
                       .configs;
      }
      const DesignReport rep = design_report(normalize_all(space, design));
      sum_gv += rep.gen_variance;
      sum_corr += rep.mean_abs_corr;
    }
    rows.push_back({to_string(w), sum_gv / n_seeds, sum_corr / n_seeds});
  }
  return rows;
}

}  // namespace llambo
