#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "llambo/llm.hpp"

namespace llambo {

namespace {

std::string format_score(double s) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%#.6g", s);
  return buf;
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string format_value(const ParamSpec& spec, const ParamValue& value) {
  switch (spec.kind) {
    case ParamKind::continuous: return format_real(std::get<double>(value));
    case ParamKind::integer: return std::to_string(std::get<std::int64_t>(value));
    case ParamKind::categorical: return std::get<std::string>(value);
  }
  throw Error("unreachable param kind");
}

std::string alias_name(std::size_t index) { return "X" + std::to_string(index + 1); }

// "{max_depth: 5, learning_rate: 0.001}" in space order, names aliased at
// level none. Shared between history lines, candidate rendering, and the
// "already suggested" warmstart block.
std::string render_config(const SearchSpace& space, const Config& config, ContextLevel level) {
  std::string out = "{";
  for (std::size_t i = 0; i < space.params.size(); ++i) {
    const ParamSpec& spec = space.params[i];
    if (i > 0) out += ", ";
    out += (level == ContextLevel::none ? alias_name(i) : spec.name) + ": " +
           format_value(spec, config.values.at(spec.name));
  }
  return out + "}";
}

std::string render_space(const SearchSpace& space, ContextLevel level) {
  std::string out;
  for (std::size_t i = 0; i < space.params.size(); ++i) {
    const ParamSpec& spec = space.params[i];
    out += "- " + (level == ContextLevel::none ? alias_name(i) : spec.name) + ": ";
    switch (spec.kind) {
      case ParamKind::continuous:
        out += "real in [" + format_real(spec.lower) + ", " + format_real(spec.upper) + "]";
        break;
      case ParamKind::integer:
        out += "integer in [" + format_real(spec.lower) + ", " + format_real(spec.upper) + "]";
        break;
      case ParamKind::categorical: {
        out += "one of {";
        for (std::size_t c = 0; c < spec.choices.size(); ++c)
          out += (c ? ", " : "") + spec.choices[c];
        out += "}";
        break;
      }
    }
    if (spec.scale == Scale::log) out += " (log scale)";
    if (i + 1 < space.params.size()) out += "\n";
  }
  return out;
}

const char* goal_phrase(const Task& task) {
  return task.direction == Direction::maximize ? "higher is better" : "lower is better";
}

std::string metric_word(const Task& task, ContextLevel level) {
  return level == ContextLevel::none ? "objective" : task.task_card.metric_name;
}

std::string metric_goal(const Task& task, ContextLevel level) {
  if (level == ContextLevel::none) return goal_phrase(task);
  return task.task_card.metric_name + ", " + goal_phrase(task);
}

// Data Card + Model Card block, or the uninformed one-liner at level none.
// Always ends with a blank line so the next section starts fresh.
std::string render_context(const Task& task, ContextLevel level) {
  const SearchSpace& space = task.space();
  if (level == ContextLevel::none) {
    return "We are optimizing a black-box function of " + std::to_string(space.params.size()) +
           " parameters.\n\n";
  }
  const TaskCard& card = task.task_card;
  std::string out = "Data Card:\n";
  out += "- dataset: " + card.dataset_name + "\n";
  out += "- samples: " + std::to_string(card.n_samples) + "\n";
  out += "- features: " + std::to_string(card.n_features) + " (" + card.feature_kinds + ")\n";
  out += "- task type: " + card.task_type + "\n";
  out += "- metric: " + card.metric_name + " (" + goal_phrase(task) + ")\n";
  if (level == ContextLevel::full && !card.description.empty())
    out += "- description: " + card.description + "\n";
  out += "\nModel Card:\n";
  out += "- model: " + task.model_card.model_name + "\n";
  if (level == ContextLevel::full && !task.model_card.description.empty())
    out += "- description: " + task.model_card.description + "\n";
  return out + "\n";
}

// Midpoint config rendered as a JSON object in space order; shows the model
// the exact shape and value types expected back.
std::string render_example(const SearchSpace& space, ContextLevel level) {
  UnitPoint mid;
  mid.coords = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(space.params.size()), 0.5);
  const Config config = denormalize(space, mid);
  nlohmann::ordered_json obj;
  for (std::size_t i = 0; i < space.params.size(); ++i) {
    const ParamSpec& spec = space.params[i];
    const std::string name = level == ContextLevel::none ? alias_name(i) : spec.name;
    const ParamValue& value = config.values.at(spec.name);
    switch (spec.kind) {
      case ParamKind::continuous: obj[name] = std::get<double>(value); break;
      case ParamKind::integer: obj[name] = std::get<std::int64_t>(value); break;
      case ParamKind::categorical: obj[name] = std::get<std::string>(value); break;
    }
  }
  return obj.dump();
}

void replace_all(std::string& text, const std::string& token, const std::string& value) {
  for (std::size_t pos = text.find(token); pos != std::string::npos;
       pos = text.find(token, pos + value.size()))
    text.replace(pos, token.size(), value);
}

std::string read_if_exists(const std::filesystem::path& path, const std::string& fallback) {
  std::ifstream in(path);
  if (!in) return fallback;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

const char* to_string(ContextLevel level) {
  switch (level) {
    case ContextLevel::full: return "full";
    case ContextLevel::partial: return "partial";
    case ContextLevel::none: return "none";
  }
  throw Error("unreachable context level");
}

ContextLevel context_level_from_string(const std::string& s) {
  if (s == "full") return ContextLevel::full;
  if (s == "partial") return ContextLevel::partial;
  if (s == "none") return ContextLevel::none;
  throw ValidationError("unknown context level '" + s + "' (expected full, partial, or none)");
}

const PromptTemplates& PromptTemplates::defaults() {
  static const PromptTemplates kDefaults = {
      // system
      "You are an assistant that helps choose hyperparameter configurations for "
      "machine learning models. Always answer with exactly the JSON requested and "
      "no additional text.\n",
      // warmstart
      "{context}The search space is:\n"
      "{space}\n"
      "\n"
      "{already}Recommend one promising configuration to evaluate.\n"
      "Answer with a single JSON object in the form {example} and nothing else.\n",
      // candidates
      "{context}The search space is:\n"
      "{space}\n"
      "\n"
      "The following configurations have been evaluated ({metric_goal}):\n"
      "{history}\n"
      "\n"
      "Recommend {k} diverse promising configurations to evaluate next.\n"
      "Answer with a JSON array of exactly {k} objects, each in the form {example}, "
      "and nothing else.\n",
      // surrogate
      "{context}The search space is:\n"
      "{space}\n"
      "\n"
      "The following configurations have been evaluated ({metric_goal}):\n"
      "{history}\n"
      "\n"
      "Candidate configuration:\n"
      "{candidate}\n"
      "\n"
      "Predict the {metric} value this candidate will achieve. Answer with a single "
      "number and nothing else.\n"};
  return kDefaults;
}

PromptTemplates PromptTemplates::load_dir(const std::string& dir) {
  const std::filesystem::path base(dir);
  const PromptTemplates& d = defaults();
  return {read_if_exists(base / "system.txt", d.system),
          read_if_exists(base / "warmstart.txt", d.warmstart),
          read_if_exists(base / "candidates.txt", d.candidates),
          read_if_exists(base / "surrogate.txt", d.surrogate)};
}

std::string serialize_history(const SearchSpace& space, const History& history,
                              ContextLevel level) {
  std::string out;
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (i > 0) out += "\n";
    out += "performance: " + format_score(history[i].score) +
           ", hyperparameters: " + render_config(space, history[i].config, level);
  }
  return out;
}

SearchSpace aliased_space(const SearchSpace& space) {
  SearchSpace out = space;
  for (std::size_t i = 0; i < out.params.size(); ++i) out.params[i].name = alias_name(i);
  return out;
}

Config unalias_config(const SearchSpace& space, const Config& aliased) {
  Config out;
  for (std::size_t i = 0; i < space.params.size(); ++i) {
    const auto it = aliased.values.find(alias_name(i));
    if (it == aliased.values.end())
      throw ValidationError("unalias_config: missing parameter " + alias_name(i));
    out.values[space.params[i].name] = it->second;
  }
  return out;
}

PromptBundle build_warmstart_prompt(const Task& task, ContextLevel level,
                                    const std::vector<Config>& already,
                                    const PromptTemplates& templates) {
  const SearchSpace& space = task.space();
  std::string already_block;
  if (!already.empty()) {
    already_block = "The following configurations were already suggested:\n";
    for (const Config& config : already)
      already_block += "- " + render_config(space, config, level) + "\n";
    already_block += "Propose a configuration different from all of the above.\n\n";
  }
  PromptBundle bundle;
  bundle.system_text = templates.system;
  bundle.user_text = templates.warmstart;
  replace_all(bundle.user_text, "{context}", render_context(task, level));
  replace_all(bundle.user_text, "{space}", render_space(space, level));
  replace_all(bundle.user_text, "{already}", already_block);
  replace_all(bundle.user_text, "{example}", render_example(space, level));
  bundle.expected_schema = ReplySchema::config;
  return bundle;
}

PromptBundle build_candidate_prompt(const Task& task, const History& history, ContextLevel level,
                                    int k, const PromptTemplates& templates) {
  if (history.empty()) throw ValidationError("candidate prompt requires a nonempty history");
  if (k < 1) throw ValidationError("candidate prompt requires k >= 1, got " + std::to_string(k));
  const SearchSpace& space = task.space();
  PromptBundle bundle;
  bundle.system_text = templates.system;
  bundle.user_text = templates.candidates;
  replace_all(bundle.user_text, "{context}", render_context(task, level));
  replace_all(bundle.user_text, "{space}", render_space(space, level));
  replace_all(bundle.user_text, "{metric_goal}", metric_goal(task, level));
  replace_all(bundle.user_text, "{history}", serialize_history(space, history, level));
  replace_all(bundle.user_text, "{k}", std::to_string(k));
  replace_all(bundle.user_text, "{example}", render_example(space, level));
  bundle.expected_schema = ReplySchema::config_list;
  return bundle;
}

PromptBundle build_surrogate_prompt(const Task& task, const History& history,
                                    const Config& candidate, ContextLevel level,
                                    const PromptTemplates& templates) {
  if (history.empty()) throw ValidationError("surrogate prompt requires a nonempty history");
  const SearchSpace& space = task.space();
  validate_config(space, candidate);
  PromptBundle bundle;
  bundle.system_text = templates.system;
  bundle.user_text = templates.surrogate;
  replace_all(bundle.user_text, "{context}", render_context(task, level));
  replace_all(bundle.user_text, "{space}", render_space(space, level));
  replace_all(bundle.user_text, "{metric_goal}", metric_goal(task, level));
  replace_all(bundle.user_text, "{history}", serialize_history(space, history, level));
  replace_all(bundle.user_text, "{candidate}",
              "hyperparameters: " + render_config(space, candidate, level));
  replace_all(bundle.user_text, "{metric}", metric_word(task, level));
  bundle.expected_schema = ReplySchema::score;
  return bundle;
}

}  // namespace llambo
