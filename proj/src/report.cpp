#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <utility>

#include "llambo/harness.hpp"

namespace llambo {

namespace {

namespace fs = std::filesystem;

std::string fmt_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// Commas and quotes in free-text fields (failure reasons) need escaping.
std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << content;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json parse_doc(const std::string& text, const std::string& what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(what + ": " + e.what());
  }
}

Provenance provenance_from_string(const std::string& s) {
  if (s == "random") return Provenance::random;
  if (s == "tpe_ind") return Provenance::tpe_ind;
  if (s == "tpe_mv") return Provenance::tpe_mv;
  if (s == "llm") return Provenance::llm;
  throw SchemaError("unknown provenance '" + s + "'");
}

// Wall times are deliberately left out: with the scripted backend a re-run must
// reproduce every byte.
nlohmann::json entry_to_json(const TrialEntry& e) {
  nlohmann::json j{{"trial", e.index},
                   {"config", config_to_json(e.config)},
                   {"score", e.score},
                   {"provenance", to_string(e.provenance)},
                   {"fallback", e.fallback},
                   {"duplicate", e.duplicate},
                   {"retries", e.retries},
                   {"surrogate_fallbacks", e.surrogate_fallbacks}};
  if (e.pred) j["pred"] = {{"mean", e.pred->mean}, {"std", e.pred->std}};
  return j;
}

TrialEntry entry_from_json(const SearchSpace& space, const nlohmann::json& j) {
  TrialEntry e;
  e.index = j.at("trial").get<int>();
  e.config = config_from_json(space, j.at("config"));
  e.score = j.at("score").get<double>();
  e.provenance = provenance_from_string(j.at("provenance").get<std::string>());
  e.fallback = j.at("fallback").get<bool>();
  e.duplicate = j.at("duplicate").get<bool>();
  e.retries = j.at("retries").get<int>();
  e.surrogate_fallbacks = j.at("surrogate_fallbacks").get<int>();
  if (j.contains("pred"))
    e.pred = PredictiveDistribution{j.at("pred").at("mean").get<double>(),
                                    j.at("pred").at("std").get<double>()};
  return e;
}

double canonical(Direction dir, double score) {
  return dir == Direction::minimize ? score : -score;
}

}  // namespace

void save_records(const std::string& out_dir, const ExperimentSpec& spec,
                  const std::vector<RunRecord>& records) {
  fs::create_directories(out_dir);
  write_file(fs::path(out_dir) / "spec.json", spec.to_json().dump(2) + "\n");
  for (const RunRecord& r : records) {
    std::string lines;
    const nlohmann::json meta{{"run_index", r.run_index},         {"seed", r.seed},
                              {"failed", r.failed},               {"fail_reason", r.fail_reason},
                              {"warmstart_retries", r.warmstart_retries},
                              {"curve", r.curve.values}};
    lines += meta.dump();
    lines += '\n';
    for (const TrialEntry& e : r.entries) {
      lines += entry_to_json(e).dump();
      lines += '\n';
    }
    write_file(fs::path(out_dir) / ("run_" + std::to_string(r.run_index) + ".jsonl"), lines);

    if (!r.llm_log.empty()) {
      std::string log;
      for (const LlmExchange& x : r.llm_log) {
        log += nlohmann::json{{"stage", x.stage},
                              {"system_text", x.system_text},
                              {"user_text", x.user_text},
                              {"raw_reply", x.raw_reply},
                              {"ok", x.ok},
                              {"error", x.error},
                              {"fallback", x.fallback},
                              {"attempt", x.attempt}}
                   .dump();
        log += '\n';
      }
      write_file(fs::path(out_dir) / ("llm_" + std::to_string(r.run_index) + ".jsonl"), log);
    }
  }
}

LoadedSuite load_records(const std::string& dir) {
  LoadedSuite suite;
  suite.spec =
      ExperimentSpec::from_json(parse_doc(read_file(fs::path(dir) / "spec.json"), "spec.json"));
  const SearchSpace space = find_task(suite.spec.task_id).space();

  for (int i = 0;; ++i) {
    const fs::path path = fs::path(dir) / ("run_" + std::to_string(i) + ".jsonl");
    if (!fs::exists(path)) break;
    RunRecord rec;
    rec.spec = suite.spec;
    std::istringstream in(read_file(path));
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const nlohmann::json j = parse_doc(line, path.filename().string());
      try {
        if (first) {
          rec.run_index = j.at("run_index").get<int>();
          rec.seed = j.at("seed").get<std::uint64_t>();
          rec.failed = j.at("failed").get<bool>();
          rec.fail_reason = j.at("fail_reason").get<std::string>();
          rec.warmstart_retries = j.at("warmstart_retries").get<int>();
          rec.curve.values = j.at("curve").get<std::vector<double>>();
          first = false;
        } else {
          rec.entries.push_back(entry_from_json(space, j));
        }
      } catch (const nlohmann::json::exception& e) {
        throw SchemaError(path.filename().string() + ": " + e.what());
      }
    }
    if (first) throw SchemaError(path.filename().string() + ": missing meta line");
    const std::size_t n_ws =
        std::min(rec.entries.size(), static_cast<std::size_t>(suite.spec.n_init));
    for (std::size_t k = 0; k < n_ws; ++k) rec.warmstart_configs.push_back(rec.entries[k].config);
    suite.records.push_back(std::move(rec));
  }
  if (suite.records.empty()) throw ValidationError("no run files found in " + dir);
  return suite;
}

BoundsMap load_bounds(const std::string& path) {
  const nlohmann::json doc = parse_doc(read_file(path), "bounds file");
  if (!doc.is_object()) throw SchemaError("bounds file: expected an object keyed by task id");
  BoundsMap map;
  try {
    for (const auto& [task_id, v] : doc.items())
      map[task_id] = BoundsEntry{v.at("best").get<double>(), v.at("worst").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("bounds file: ") + e.what());
  }
  return map;
}

void aggregate_curves(const std::vector<SuiteResult>& suites, const std::string& out_dir,
                      Normalization norm, const BoundsMap* bounds) {
  if (suites.empty()) throw ValidationError("aggregate: no suites");
  const int n_init = suites.front().spec.n_init;
  const int n_trials = suites.front().spec.n_trials;
  for (const SuiteResult& s : suites)
    if (s.spec.n_init != n_init || s.spec.n_trials != n_trials)
      throw ValidationError("aggregate: mixed specs (n_init/n_trials differ between suites)");
  const int horizon = n_init + n_trials;

  std::map<std::string, Direction> task_dir;
  std::map<std::string, std::pair<double, double>> observed;  // canonical (min, max) per task
  std::map<std::pair<std::string, std::string>, std::vector<std::vector<double>>> groups;
  std::vector<std::array<std::string, 4>> warn_rows;

  for (const SuiteResult& s : suites) {
    const std::string method = s.spec.method_label();
    const std::string& task_id = s.spec.task_id;
    const auto [it, inserted] = task_dir.emplace(task_id, s.direction);
    if (!inserted && it->second != s.direction)
      throw ValidationError("aggregate: conflicting directions for task " + task_id);
    for (const RunRecord& r : s.records) {
      if (r.failed) {
        warn_rows.push_back({task_id, method, std::to_string(r.run_index),
                             r.fail_reason.empty() ? "failed" : r.fail_reason});
        continue;
      }
      if (static_cast<int>(r.entries.size()) != horizon)
        throw ValidationError("aggregate: record entry count does not match the spec budget");
      std::vector<double> canon(r.entries.size());
      for (std::size_t i = 0; i < r.entries.size(); ++i)
        canon[i] = canonical(s.direction, r.entries[i].score);
      const auto [lo, hi] = std::minmax_element(canon.begin(), canon.end());
      auto [obs_it, fresh] = observed.emplace(task_id, std::make_pair(*lo, *hi));
      if (!fresh) {
        obs_it->second.first = std::min(obs_it->second.first, *lo);
        obs_it->second.second = std::max(obs_it->second.second, *hi);
      }
      groups[{task_id, method}].push_back(std::move(canon));
    }
  }

  std::string csv = "task,method,trial,statistic,value\n";
  for (const auto& [key, runs] : groups) {
    const std::string& task_id = key.first;
    double y_best = 0.0, y_worst = 0.0;
    if (norm == Normalization::per_task) {
      // Union of every non-failed run's observations for the task.
      const auto& mm = observed.at(task_id);
      y_best = mm.first;
      y_worst = mm.second;
    } else {
      const Direction dir = task_dir.at(task_id);
      if (bounds && bounds->count(task_id)) {
        const BoundsEntry& b = bounds->at(task_id);
        y_best = canonical(dir, b.best);
        y_worst = canonical(dir, b.worst);
      } else {
        Task task;
        try {
          task = find_task(task_id);
        } catch (const Error&) {
          throw ValidationError("aggregate: no global bounds for task " + task_id);
        }
        if (!task.known_best || !task.known_worst)
          throw ValidationError("aggregate: no global bounds for task " + task_id);
        y_best = canonical(dir, *task.known_best);
        y_worst = canonical(dir, *task.known_worst);
      }
    }

    std::vector<RegretCurve> curves;
    curves.reserve(runs.size());
    for (const std::vector<double>& scores : runs)
      curves.push_back(regret_curve(scores, y_best, y_worst));

    for (int t = 0; t < horizon; ++t) {
      double mean = 0.0;
      for (const RegretCurve& c : curves) mean += c.values[static_cast<std::size_t>(t)];
      mean /= static_cast<double>(curves.size());
      double sd = 0.0;
      if (curves.size() > 1) {
        for (const RegretCurve& c : curves) {
          const double d = c.values[static_cast<std::size_t>(t)] - mean;
          sd += d * d;
        }
        sd = std::sqrt(sd / static_cast<double>(curves.size() - 1));
      }
      csv += task_id + "," + key.second + "," + std::to_string(t) + ",mean," + fmt_value(mean) +
             "\n";
      csv += task_id + "," + key.second + "," + std::to_string(t) + ",std," + fmt_value(sd) +
             "\n";
    }
  }

  std::sort(warn_rows.begin(), warn_rows.end());
  std::string warn = "task,method,run_index,reason\n";
  for (const auto& row : warn_rows)
    warn += row[0] + "," + row[1] + "," + row[2] + "," + csv_quote(row[3]) + "\n";

  fs::create_directories(out_dir);
  write_file(fs::path(out_dir) / "curves.csv", csv);
  write_file(fs::path(out_dir) / "warnings.csv", warn);
}

void write_surrogate_csv(const std::vector<SurrogateReport>& reports, const std::string& path) {
  std::vector<const SurrogateReport*> order;
  order.reserve(reports.size());
  for (const SurrogateReport& r : reports) order.push_back(&r);
  std::sort(order.begin(), order.end(), [](const SurrogateReport* a, const SurrogateReport* b) {
    return std::tie(a->model, a->n_train, a->split_id) <
           std::tie(b->model, b->n_train, b->split_id);
  });

  std::string csv = "model,n_train,metric,value\n";
  for (const SurrogateReport* r : order) {
    const std::pair<const char*, double> metrics[] = {
        {"nrmse", r->nrmse},         {"r2", r->r2},
        {"nlpd", r->nlpd_mean},      {"coverage", r->coverage},
        {"sharpness", r->sharpness}, {"degenerate", r->degenerate ? 1.0 : 0.0}};
    for (const auto& [name, value] : metrics)
      csv += r->model + "," + std::to_string(r->n_train) + "," + name + "," + fmt_value(value) +
             "\n";
  }
  if (const fs::path parent = fs::path(path).parent_path(); !parent.empty())
    fs::create_directories(parent);
  write_file(path, csv);
}

void write_warmstart_csv(const std::vector<WarmstartStudyRow>& rows, const std::string& path) {
  std::string csv = "strategy,metric,value\n";
  for (const WarmstartStudyRow& r : rows) {
    csv += r.strategy + ",gen_variance," + fmt_value(r.mean_gen_variance) + "\n";
    csv += r.strategy + ",mean_abs_corr," + fmt_value(r.mean_abs_corr) + "\n";
  }
  if (const fs::path parent = fs::path(path).parent_path(); !parent.empty())
    fs::create_directories(parent);
  write_file(path, csv);
}

}  // namespace llambo
