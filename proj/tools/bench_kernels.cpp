// Times every data-parallel kernel against its serial reference and checks the
// two paths produce bit-identical results. Work per index never crosses thread
// boundaries, so any mismatch is a bug, not noise.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "llambo/acquire.hpp"
#include "llambo/harness.hpp"

#include <CLI11.hpp>

namespace {

using namespace llambo;
using Clock = std::chrono::steady_clock;

double time_ms(const std::function<void()>& fn) {
  const auto t0 = Clock::now();
  fn();
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct Row {
  std::string name;
  double serial_ms = 0.0;
  double parallel_ms = 0.0;
  bool match = false;
};

void print(const Row& r) {
  std::printf("%-20s %10.1f ms %10.1f ms %8.2fx   %s\n", r.name.c_str(), r.serial_ms,
              r.parallel_ms, r.serial_ms / r.parallel_ms, r.match ? "bit-exact" : "MISMATCH");
}

std::vector<UnitPoint> random_points(int n, int d, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<UnitPoint> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd u(d);
    for (int j = 0; j < d; ++j) u[j] = rng.uniform01();
    pts.push_back(UnitPoint{u});
  }
  return pts;
}

std::vector<double> toy_scores(const std::vector<UnitPoint>& pts) {
  std::vector<double> y;
  y.reserve(pts.size());
  for (const UnitPoint& p : pts) y.push_back((p.coords.array() - 0.3).square().sum());
  return y;
}

bool equal(const std::vector<PredictiveDistribution>& a,
           const std::vector<PredictiveDistribution>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].mean != b[i].mean || a[i].std != b[i].std) return false;
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serial vs parallel kernel benchmark"};
  int n_train = 96, d = 6, n_batch = 8192, n_trees = 256;
  app.add_option("--n-train", n_train, "training points for the model fits");
  app.add_option("--dims", d, "input dimensionality");
  app.add_option("--n-batch", n_batch, "prediction / scoring batch size");
  app.add_option("--n-trees", n_trees, "forest size");
  CLI11_PARSE(app, argc, argv);

  std::printf("threads available: %d\n\n", max_threads());
  std::printf("%-20s %13s %13s %9s\n", "kernel", "serial", "parallel", "speedup");

  const std::vector<UnitPoint> train = random_points(n_train, d, 42);
  const std::vector<double> y = toy_scores(train);
  const std::vector<UnitPoint> batch = random_points(n_batch, d, 43);

  {
    Row r{"gp_fit", 0, 0, false};
    GpModel serial_model, parallel_model;
    r.serial_ms = time_ms([&] { serial_model = gp_fit(train, y, 1, Exec::serial); });
    r.parallel_ms = time_ms([&] { parallel_model = gp_fit(train, y, 1, Exec::parallel); });
    r.match = serial_model.lml == parallel_model.lml &&
              serial_model.length == parallel_model.length &&
              serial_model.noise_std == parallel_model.noise_std;
    print(r);

    Row p{"gp_predict_batch", 0, 0, false};
    std::vector<PredictiveDistribution> ps, pp;
    p.serial_ms = time_ms([&] { ps = gp_predict_batch(serial_model, batch, Exec::serial); });
    p.parallel_ms = time_ms([&] { pp = gp_predict_batch(serial_model, batch, Exec::parallel); });
    p.match = equal(ps, pp);
    print(p);
  }

  {
    Row r{"forest_fit", 0, 0, false};
    ForestModel fs, fp;
    r.serial_ms = time_ms([&] { fs = forest_fit(train, y, n_trees, 2, Exec::serial); });
    r.parallel_ms = time_ms([&] { fp = forest_fit(train, y, n_trees, 2, Exec::parallel); });
    r.match = fs.trees.size() == fp.trees.size();
    for (std::size_t i = 0; r.match && i < fs.trees.size(); ++i)
      r.match = fs.trees[i].nodes.size() == fp.trees[i].nodes.size() &&
                fs.trees[i].inbag == fp.trees[i].inbag;
    print(r);
  }

  {
    const TpeModel model = tpe_fit(train, y, 0.25, TpeMode::multivariate, 3);
    Row r{"tpe_score_batch", 0, 0, false};
    std::vector<double> ss, sp;
    r.serial_ms = time_ms([&] { ss = tpe_score_batch(model, batch, Exec::serial); });
    r.parallel_ms = time_ms([&] { sp = tpe_score_batch(model, batch, Exec::parallel); });
    r.match = ss == sp;
    print(r);
  }

  {
    const Task task = find_task("synthetic/Sphere");
    const GpModel model = gp_fit(random_points(32, 3, 7), toy_scores(random_points(32, 3, 7)),
                                 1, Exec::parallel);
    const CandidateBatch pool = propose_random(task.space(), n_batch, 11);
    const SurrogateFn fn = [&](const Config& c) {
      return gp_predict(model, normalize(task.space(), c));
    };
    Row r{"select_next", 0, 0, false};
    Selection sel_s, sel_p;
    r.serial_ms = time_ms([&] { sel_s = select_next(pool, fn, 0.5, Exec::serial); });
    r.parallel_ms = time_ms([&] { sel_p = select_next(pool, fn, 0.5, Exec::parallel); });
    r.match = sel_s.index == sel_p.index && sel_s.ei == sel_p.ei;
    print(r);
  }

  {
    ExperimentSpec spec;
    spec.task_id = "synthetic/Sphere";
    spec.optimizer = Optimizer::gp_ei;
    spec.n_init = 5;
    spec.n_trials = 10;
    spec.n_runs = 4;
    Row r{"run_suite gp_ei", 0, 0, false};
    std::vector<RunRecord> rs, rp;
    r.serial_ms = time_ms([&] { rs = run_suite(spec, Exec::serial); });
    r.parallel_ms = time_ms([&] { rp = run_suite(spec, Exec::parallel); });
    r.match = rs.size() == rp.size();
    for (std::size_t i = 0; r.match && i < rs.size(); ++i)
      for (std::size_t k = 0; r.match && k < rs[i].entries.size(); ++k)
        r.match = rs[i].entries[k].score == rp[i].entries[k].score &&
                  rs[i].entries[k].config == rp[i].entries[k].config;
    print(r);
  }

  return 0;
}
