#include "llambo/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>

#include "llambo/sobol.hpp"

namespace llambo {

double eval_objective(const Task& task, const Config& config) {
  validate_config(task.space(), config);
  return task.objective(config);
}

namespace {

// Convex quadratic over the unit cube with pairwise interactions:
//   f(u) = sum_d w_d (u_d - c_d)^2 + sum_{i<j} C_ij (u_i - c_i)(u_j - c_j)
// The interaction matrix is scaled for diagonal dominance, keeping f convex so
// the cube minimum (projected gradient) and maximum (a vertex) are exact.
struct QuadraticSurface {
  Eigen::VectorXd weight, center;
  Eigen::MatrixXd quad;  // diag(weight) + C/2

  static QuadraticSurface make(std::uint64_t seed, int d) {
    Rng rng(seed);
    QuadraticSurface s;
    s.center.resize(d);
    s.weight.resize(d);
    for (int i = 0; i < d; ++i) s.center[i] = rng.uniform(0.12, 0.88);
    for (int i = 0; i < d; ++i) s.weight[i] = rng.uniform(0.5, 2.0);
    Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) cross(i, j) = cross(j, i) = rng.uniform(-1.0, 1.0);
    // Scale interactions so each row stays diagonally dominant (factor 0.9).
    double scale = 1.0;
    for (int i = 0; i < d; ++i) {
      const double row = cross.row(i).cwiseAbs().sum();
      if (row > 0.0) scale = std::min(scale, 1.8 * s.weight[i] / row);
    }
    s.quad = Eigen::MatrixXd(s.weight.asDiagonal());
    s.quad += 0.5 * scale * cross;
    return s;
  }

  double value(const Eigen::VectorXd& u) const {
    const Eigen::VectorXd t = u - center;
    return t.dot(quad * t);
  }

  // Global minimum over [0,1]^d via Sobol probe + projected gradient descent
  // (convexity makes the local refinement global).
  double min_over_cube() const {
    const int d = static_cast<int>(weight.size());
    SobolSequence seq(d);
    Eigen::VectorXd best_u = Eigen::VectorXd::Constant(d, 0.5);
    double best_f = value(best_u);
    for (int i = 0; i < (1 << 14); ++i) {
      const auto p = seq.next();
      Eigen::VectorXd u(d);
      for (int k = 0; k < d; ++k) u[k] = p[static_cast<std::size_t>(k)];
      const double f = value(u);
      if (f < best_f) {
        best_f = f;
        best_u = u;
      }
    }
    // Lipschitz constant of the gradient from the infinity norm of 2*quad.
    const double lips = 2.0 * quad.cwiseAbs().rowwise().sum().maxCoeff();
    const double step = 1.0 / lips;
    Eigen::VectorXd u = best_u;
    for (int it = 0; it < 4000; ++it) {
      const Eigen::VectorXd g = 2.0 * (quad * (u - center));
      Eigen::VectorXd next = (u - step * g).cwiseMax(0.0).cwiseMin(1.0);
      if ((next - u).lpNorm<Eigen::Infinity>() < 1e-15) break;
      u = next;
    }
    return std::min(best_f, value(u));
  }

  // Convex functions attain their cube maximum at a vertex.
  double max_over_cube() const {
    const int d = static_cast<int>(weight.size());
    double best = -std::numeric_limits<double>::infinity();
    for (std::uint32_t mask = 0; mask < (1u << d); ++mask) {
      Eigen::VectorXd u(d);
      for (int k = 0; k < d; ++k) u[k] = (mask >> k) & 1u ? 1.0 : 0.0;
      best = std::max(best, value(u));
    }
    return best;
  }
};

constexpr double kBoundMargin = 1e-9;

// --- dataset cards -----------------------------------------------------------

TaskCard breast_card() {
  return {"breast", 569, 30, "30 continuous", "binary classification", "accuracy",
          "Diagnostic measurements of cell nuclei from digitized fine-needle aspirates "
          "of breast masses; predict whether a tumour is malignant or benign."};
}

TaskCard digits_card() {
  return {"digits", 1797, 64, "64 integer pixel intensities (0-16)",
          "multiclass classification", "accuracy",
          "8x8 grayscale images of handwritten digits; predict which of the ten digits "
          "is shown."};
}

TaskCard diabetes_card() {
  return {"diabetes", 442, 10, "10 continuous (standardized)", "regression", "mse",
          "Baseline physiological variables and blood serum measurements of diabetes "
          "patients; predict a quantitative measure of disease progression one year "
          "after baseline."};
}

TaskCard iris_card() {
  return {"iris", 150, 4, "4 continuous", "multiclass classification", "accuracy",
          "Sepal and petal length and width of iris flowers; predict which of three "
          "species a flower belongs to."};
}

TaskCard wine_card() {
  return {"wine", 178, 13, "13 continuous", "multiclass classification", "accuracy",
          "Chemical analysis of wines grown by three different cultivators; predict "
          "the cultivar of origin."};
}

// --- model cards -------------------------------------------------------------

ModelCard random_forest_card() {
  SearchSpace s;
  s.params.push_back({"max_depth", ParamKind::integer, 1, 15, {}, Scale::linear});
  s.params.push_back({"max_features", ParamKind::continuous, 0.01, 0.99, {}, Scale::linear});
  s.params.push_back({"min_samples_split", ParamKind::continuous, 0.01, 0.5, {}, Scale::log});
  s.params.push_back({"min_impurity_decrease", ParamKind::continuous, 1e-9, 1e-1, {}, Scale::log});
  return {"RandomForest", std::move(s),
          "Bagged ensemble of decision trees with per-split feature subsampling."};
}

ModelCard ada_boost_card() {
  SearchSpace s;
  s.params.push_back({"n_estimators", ParamKind::integer, 10, 500, {}, Scale::log});
  s.params.push_back({"learning_rate", ParamKind::continuous, 1e-2, 10.0, {}, Scale::log});
  return {"AdaBoost", std::move(s),
          "Adaptive boosting over shallow decision trees; later learners focus on "
          "previously misclassified samples."};
}

ModelCard svm_card() {
  SearchSpace s;
  s.params.push_back({"C", ParamKind::continuous, 1e-3, 1e3, {}, Scale::log});
  s.params.push_back({"gamma", ParamKind::continuous, 1e-4, 1e1, {}, Scale::log});
  s.params.push_back({"tol", ParamKind::continuous, 1e-5, 1e-1, {}, Scale::log});
  return {"SVM", std::move(s), "Support vector machine with an RBF kernel."};
}

ModelCard logistic_card() {
  SearchSpace s;
  s.params.push_back({"C", ParamKind::continuous, 1e-4, 1e4, {}, Scale::log});
  s.params.push_back({"tol", ParamKind::continuous, 1e-6, 1e-2, {}, Scale::log});
  s.params.push_back({"penalty", ParamKind::categorical, 0, 0, {"l1", "l2"}, Scale::linear});
  return {"LogisticRegression", std::move(s),
          "Linear model with a logistic link and L1 or L2 regularization."};
}

ModelCard mlp_card() {
  SearchSpace s;
  s.params.push_back({"hidden_layer_size", ParamKind::integer, 4, 256, {}, Scale::log});
  s.params.push_back({"alpha", ParamKind::continuous, 1e-6, 1e-1, {}, Scale::log});
  s.params.push_back({"learning_rate_init", ParamKind::continuous, 1e-5, 1e-1, {}, Scale::log});
  s.params.push_back({"batch_size", ParamKind::integer, 8, 256, {}, Scale::log});
  s.params.push_back({"activation", ParamKind::categorical, 0, 0, {"relu", "tanh"}, Scale::linear});
  return {"MLP", std::move(s),
          "Single-hidden-layer feed-forward network trained with stochastic gradient "
          "descent."};
}

// --- synthetic stand-in objectives --------------------------------------------

Task make_surface_task(const TaskCard& data, const ModelCard& model) {
  Task task;
  task.id = data.dataset_name + "/" + model.model_name;
  task.task_card = data;
  task.model_card = model;
  const bool classification = data.task_type != "regression";
  task.direction = classification ? Direction::maximize : Direction::minimize;

  const auto surface = std::make_shared<QuadraticSurface>(
      QuadraticSurface::make(fnv1a64(task.id), static_cast<int>(model.space.dim())));
  const SearchSpace space = model.space;

  if (classification) {
    // Accuracy-like response in (0.55, 0.99]; higher near the surface minimum.
    auto score = [](double f) { return 0.55 + 0.44 * std::exp(-1.5 * f); };
    task.objective = [surface, space, score](const Config& c) {
      return score(surface->value(normalize(space, c).coords));
    };
    task.known_best = score(surface->min_over_cube() - kBoundMargin);
    task.known_worst = score(surface->max_over_cube() + kBoundMargin);
  } else {
    // MSE-like response; lower near the surface minimum.
    auto score = [](double f) { return 1.0 + 8.0 * f; };
    task.objective = [surface, space, score](const Config& c) {
      return score(surface->value(normalize(space, c).coords));
    };
    task.known_best = score(surface->min_over_cube() - kBoundMargin);
    task.known_worst = score(surface->max_over_cube() + kBoundMargin);
  }
  return task;
}

double branin(double x1, double x2) {
  constexpr double a = 1.0;
  const double b = 5.1 / (4.0 * std::numbers::pi * std::numbers::pi);
  const double c = 5.0 / std::numbers::pi;
  constexpr double r = 6.0;
  constexpr double s = 10.0;
  const double t = 1.0 / (8.0 * std::numbers::pi);
  const double inner = x2 - b * x1 * x1 + c * x1 - r;
  return a * inner * inner + s * (1.0 - t) * std::cos(x1) + s;
}

Task make_branin_task() {
  Task task;
  task.id = "synthetic/Branin";
  task.task_card = {"synthetic", 1, 2, "2 continuous inputs", "regression", "value",
                    "Closed-form two-dimensional benchmark surface with three global "
                    "minima, evaluated exactly."};
  SearchSpace space;
  space.params.push_back({"x1", ParamKind::continuous, -5.0, 10.0, {}, Scale::linear});
  space.params.push_back({"x2", ParamKind::continuous, 0.0, 15.0, {}, Scale::linear});
  task.model_card = {"Branin", space, "Direct evaluation of the benchmark function."};
  task.direction = Direction::minimize;
  task.objective = [space](const Config& c) {
    const UnitPoint u = normalize(space, c);
    return branin(-5.0 + 15.0 * u.coords[0], 15.0 * u.coords[1]);
  };
  // Analytic minimum 10/(8*pi), lowered by a margin against rounding.
  task.known_best = 10.0 / (8.0 * std::numbers::pi) - kBoundMargin;
  // Maximum over the box sits at the corner (-5, 0); probe a grid to be safe.
  double worst = 0.0;
  for (int i = 0; i <= 128; ++i)
    for (int j = 0; j <= 128; ++j)
      worst = std::max(worst, branin(-5.0 + 15.0 * i / 128.0, 15.0 * j / 128.0));
  task.known_worst = worst + 1.0;
  return task;
}

Task make_sphere_task() {
  Task task;
  task.id = "synthetic/Sphere";
  task.task_card = {"synthetic", 1, 3, "3 continuous inputs", "regression", "value",
                    "Closed-form convex quadratic bowl with its minimum of exactly "
                    "zero at the centre of the box."};
  SearchSpace space;
  for (int i = 1; i <= 3; ++i)
    space.params.push_back({"x" + std::to_string(i), ParamKind::continuous, -5.12, 5.12, {},
                            Scale::linear});
  task.model_card = {"Sphere", space, "Direct evaluation of the benchmark function."};
  task.direction = Direction::minimize;
  task.objective = [](const Config& c) {
    double sum = 0.0;
    for (const auto& [name, value] : c.values) {
      const double x = std::get<double>(value);
      sum += x * x;
    }
    return sum;
  };
  task.known_best = 0.0;                       // exact: f(0,0,0) = 0, u = 0.5 midpoint
  task.known_worst = 3.0 * 5.12 * 5.12;        // exact: attained at every corner
  return task;
}

const std::vector<Task>& task_registry() {
  static const std::vector<Task> registry = [] {
    std::vector<Task> tasks;
    const std::vector<TaskCard> datasets = {breast_card(), digits_card(), diabetes_card(),
                                            iris_card(), wine_card()};
    const std::vector<ModelCard> models = {random_forest_card(), ada_boost_card(), svm_card(),
                                           logistic_card(), mlp_card()};
    for (const auto& d : datasets)
      for (const auto& m : models) tasks.push_back(make_surface_task(d, m));
    tasks.push_back(make_branin_task());
    tasks.push_back(make_sphere_task());
    return tasks;
  }();
  return registry;
}

}  // namespace

std::vector<Task> builtin_tasks() {
  const auto& all = task_registry();
  return {all.begin(), all.begin() + 25};
}

std::vector<Task> all_tasks() { return task_registry(); }

Task find_task(const std::string& id) {
  for (const auto& task : task_registry())
    if (task.id == id) return task;
  std::string known;
  for (const auto& task : task_registry()) known += "\n  " + task.id;
  throw ValidationError("unknown task '" + id + "'; available:" + known);
}

// --- tabular lookup benchmarks -------------------------------------------------

TabularBenchmark load_tabular(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open tabular benchmark file '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("invalid JSON in '" + path + "': " + e.what());
  }
  if (!doc.is_object() || !doc.contains("space") || !doc.contains("rows"))
    throw SchemaError("tabular benchmark needs 'space' and 'rows'");

  TabularBenchmark bench;
  bench.space = SearchSpace::from_json(doc["space"]);
  if (!doc["rows"].is_array() || doc["rows"].empty())
    throw SchemaError("tabular benchmark needs a nonempty 'rows' array");

  std::map<std::string, std::pair<std::size_t, double>> seen;  // canonical config -> row, score
  std::size_t index = 0;
  for (const auto& row : doc["rows"]) {
    try {
      if (!row.is_object() || !row.contains("config") || !row.contains("score") ||
          !row["score"].is_number())
        throw SchemaError("row needs 'config' and numeric 'score'");
      Config config = config_from_json(bench.space, row["config"]);
      const double score = row["score"].get<double>();
      const std::string key = config_to_json(config).dump();
      auto [it, inserted] = seen.emplace(key, std::make_pair(index, score));
      if (!inserted && it->second.second != score)
        throw SchemaError("duplicate config with conflicting scores (rows " +
                          std::to_string(it->second.first) + " and " + std::to_string(index) +
                          ")");
      bench.rows.emplace_back(std::move(config), score);
    } catch (const Error& e) {
      throw SchemaError("row " + std::to_string(index) + ": " + e.what());
    }
    ++index;
  }

  if (doc.contains("direction")) {
    const std::string dir = doc["direction"].get<std::string>();
    if (dir == "maximize")
      bench.direction = Direction::maximize;
    else if (dir == "minimize")
      bench.direction = Direction::minimize;
    else
      throw SchemaError("direction must be 'minimize' or 'maximize', got '" + dir + "'");
  }
  bench.metadata.dataset_name = doc.value("name", std::string("tabular"));
  bench.metadata.metric_name = doc.value("metric", std::string("score"));
  bench.metadata.task_type = doc.value("task_type", std::string("regression"));
  bench.metadata.description = doc.value("description", std::string("Precomputed evaluations."));
  bench.metadata.n_samples = static_cast<std::int64_t>(bench.rows.size());
  bench.metadata.n_features = static_cast<std::int64_t>(bench.space.dim());
  bench.metadata.feature_kinds = std::to_string(bench.space.dim()) + " hyperparameters";
  return bench;
}

Task task_from_tabular(const TabularBenchmark& bench, const std::string& id) {
  Task task;
  task.id = id;
  task.task_card = bench.metadata;
  task.model_card = {"Lookup", bench.space, "Nearest-neighbour lookup over precomputed rows."};
  task.direction = bench.direction;

  auto points = std::make_shared<std::vector<Eigen::VectorXd>>();
  auto scores = std::make_shared<std::vector<double>>();
  for (const auto& [config, score] : bench.rows) {
    points->push_back(normalize(bench.space, config).coords);
    scores->push_back(score);
  }
  const SearchSpace space = bench.space;
  task.objective = [points, scores, space](const Config& c) {
    const Eigen::VectorXd q = normalize(space, c).coords;
    std::size_t best = 0;
    double best_d = (q - (*points)[0]).squaredNorm();
    for (std::size_t i = 1; i < points->size(); ++i) {
      const double d = (q - (*points)[i]).squaredNorm();
      if (d < best_d) {  // strict: ties keep the lowest row index
        best_d = d;
        best = i;
      }
    }
    return (*scores)[best];
  };

  const auto [lo, hi] = std::minmax_element(scores->begin(), scores->end());
  if (task.direction == Direction::minimize) {
    task.known_best = *lo;
    task.known_worst = *hi;
  } else {
    task.known_best = *hi;
    task.known_worst = *lo;
  }
  return task;
}

}  // namespace llambo
