#include <doctest.h>

#include <cstdint>
#include <vector>

#include "llambo/acquire.hpp"
#include "llambo/harness.hpp"

using namespace llambo;

namespace {

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

bool same_nodes(const Tree& a, const Tree& b) {
  if (a.inbag != b.inbag || a.nodes.size() != b.nodes.size()) return false;
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    const TreeNode &x = a.nodes[i], &y = b.nodes[i];
    if (x.feature != y.feature || x.threshold != y.threshold || x.left != y.left ||
        x.right != y.right || x.value != y.value)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("parallel_for covers every index exactly once") {
  for (Exec exec : {Exec::serial, Exec::parallel}) {
    std::vector<int> hits(257, 0);
    parallel_for(exec, 257, [&](std::ptrdiff_t i) { ++hits[static_cast<std::size_t>(i)]; });
    for (int h : hits) CHECK(h == 1);
  }
  CHECK(max_threads() >= 1);
}

TEST_CASE("gp fit and batch prediction are bit-exact across exec policies") {
  const auto train = random_points(48, 4, 42);
  const auto y = toy_scores(train);
  const auto batch = random_points(512, 4, 43);

  const GpModel ms = gp_fit(train, y, 1, Exec::serial);
  const GpModel mp = gp_fit(train, y, 1, Exec::parallel);
  CHECK(ms.lml == mp.lml);
  CHECK(ms.length == mp.length);
  CHECK(ms.signal_std == mp.signal_std);
  CHECK(ms.noise_std == mp.noise_std);
  CHECK(ms.alpha == mp.alpha);

  const auto ps = gp_predict_batch(ms, batch, Exec::serial);
  const auto pp = gp_predict_batch(ms, batch, Exec::parallel);
  REQUIRE(ps.size() == pp.size());
  for (std::size_t i = 0; i < ps.size(); ++i) {
    CHECK(ps[i].mean == pp[i].mean);
    CHECK(ps[i].std == pp[i].std);
  }
}

TEST_CASE("forest fit is bit-exact across exec policies") {
  const auto train = random_points(48, 4, 7);
  const auto y = toy_scores(train);
  const ForestModel fs = forest_fit(train, y, 64, 2, Exec::serial);
  const ForestModel fp = forest_fit(train, y, 64, 2, Exec::parallel);
  REQUIRE(fs.trees.size() == fp.trees.size());
  for (std::size_t i = 0; i < fs.trees.size(); ++i) CHECK(same_nodes(fs.trees[i], fp.trees[i]));
}

TEST_CASE("tpe score batch is bit-exact across exec policies") {
  const auto train = random_points(32, 4, 3);
  const auto y = toy_scores(train);
  const auto batch = random_points(2048, 4, 5);
  for (TpeMode mode : {TpeMode::independent, TpeMode::multivariate}) {
    const TpeModel m = tpe_fit(train, y, 0.25, mode, 3);
    CHECK(tpe_score_batch(m, batch, Exec::serial) == tpe_score_batch(m, batch, Exec::parallel));
  }
}

TEST_CASE("select_next is bit-exact across exec policies") {
  const Task task = find_task("synthetic/Sphere");
  const auto train = random_points(32, 3, 7);
  const GpModel model = gp_fit(train, toy_scores(train), 1);
  const CandidateBatch pool = propose_random(task.space(), 512, 11);
  const SurrogateFn fn = [&](const Config& c) {
    return gp_predict(model, normalize(task.space(), c));
  };
  const Selection a = select_next(pool, fn, 0.5, Exec::serial);
  const Selection b = select_next(pool, fn, 0.5, Exec::parallel);
  CHECK(a.index == b.index);
  CHECK(a.ei == b.ei);
  CHECK(a.pred.mean == b.pred.mean);
  CHECK(a.config == b.config);
}

TEST_CASE("run_suite produces identical records under both exec policies") {
  ExperimentSpec spec;
  spec.task_id = "synthetic/Sphere";
  spec.optimizer = Optimizer::gp_ei;
  spec.n_init = 4;
  spec.n_trials = 6;
  spec.n_runs = 3;
  const auto rs = run_suite(spec, Exec::serial);
  const auto rp = run_suite(spec, Exec::parallel);
  REQUIRE(rs.size() == rp.size());
  for (std::size_t i = 0; i < rs.size(); ++i) {
    CHECK(rs[i].seed == rp[i].seed);
    REQUIRE(rs[i].entries.size() == rp[i].entries.size());
    for (std::size_t k = 0; k < rs[i].entries.size(); ++k) {
      CHECK(rs[i].entries[k].score == rp[i].entries[k].score);
      CHECK(rs[i].entries[k].config == rp[i].entries[k].config);
    }
    CHECK(rs[i].curve.values == rp[i].curve.values);
  }
}
