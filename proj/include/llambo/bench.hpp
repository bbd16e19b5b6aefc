#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "llambo/space.hpp"

namespace llambo {

// Dataset metadata; rendered into the Data Card section of prompts.
struct TaskCard {
  std::string dataset_name;
  std::int64_t n_samples = 0;
  std::int64_t n_features = 0;
  std::string feature_kinds;
  std::string task_type;  // "binary classification" | "multiclass classification" | "regression"
  std::string metric_name;
  std::string description;
};

// Model metadata; rendered into the Model Card section of prompts.
struct ModelCard {
  std::string model_name;
  SearchSpace space;
  std::string description;
};

enum class Direction { minimize, maximize };

struct Task {
  std::string id;  // "<dataset>/<model>"
  TaskCard task_card;
  ModelCard model_card;
  std::function<double(const Config&)> objective;
  Direction direction = Direction::minimize;
  std::optional<double> known_best;   // raw score orientation
  std::optional<double> known_worst;

  const SearchSpace& space() const { return model_card.space; }

  // Map a raw score into the canonical minimization direction.
  double canonical(double score) const {
    return direction == Direction::minimize ? score : -score;
  }
};

// Validates the config and evaluates the task objective (pure, deterministic).
double eval_objective(const Task& task, const Config& config);

// Precomputed lookup benchmark: queries resolve to the nearest stored row in
// normalized L2 distance, ties broken by lowest row index.
struct TabularBenchmark {
  SearchSpace space;
  std::vector<std::pair<Config, double>> rows;
  TaskCard metadata;
  Direction direction = Direction::minimize;
};

TabularBenchmark load_tabular(const std::string& path);
Task task_from_tabular(const TabularBenchmark& bench, const std::string& id = "tabular/lookup");

// The 5 dataset cards x 5 model cards, with synthetic response surfaces
// standing in for actual model training.
std::vector<Task> builtin_tasks();

// builtin_tasks plus the closed-form synthetic functions
// ("synthetic/Branin", "synthetic/Sphere").
std::vector<Task> all_tasks();

// Registry lookup by "<dataset>/<model>"; throws ValidationError if unknown.
Task find_task(const std::string& id);

}  // namespace llambo
