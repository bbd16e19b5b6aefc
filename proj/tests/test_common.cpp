#include <doctest.h>

#include <cmath>
#include <set>

#include "llambo/common.hpp"
#include "llambo/parallel.hpp"

using namespace llambo;

TEST_CASE("normal quantile matches reference values") {
  // Reference values from scipy.stats.norm.ppf.
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(normal_quantile(0.95) == doctest::Approx(1.6448536269514722).epsilon(1e-12));
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
  CHECK(normal_quantile(0.025) == doctest::Approx(-1.959963984540054).epsilon(1e-12));
  CHECK(normal_quantile(1e-10) == doctest::Approx(-6.361340902404056).epsilon(1e-9));
  CHECK_THROWS_AS(normal_quantile(0.0), ValidationError);
  CHECK_THROWS_AS(normal_quantile(1.0), ValidationError);
}

TEST_CASE("normal cdf and pdf reference values") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(normal_cdf(1.0) == doctest::Approx(0.8413447460685429).epsilon(1e-14));
  CHECK(normal_pdf(0.0) == doctest::Approx(0.3989422804014327).epsilon(1e-14));
  CHECK(normal_pdf(1.0) == doctest::Approx(0.24197072451914337).epsilon(1e-14));
}

TEST_CASE("quantile inverts cdf across the unit interval") {
  for (double p : {1e-8, 1e-4, 0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99, 0.9999, 1.0 - 1e-8}) {
    const double z = normal_quantile(p);
    CHECK(normal_cdf(z) == doctest::Approx(p).epsilon(1e-11));
  }
}

TEST_CASE("rng streams are deterministic and seed-sensitive") {
  Rng a(123), b(123), c(124);
  bool all_equal = true;
  bool any_diff = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform01();
    if (x != b.uniform01()) all_equal = false;
    if (x != c.uniform01()) any_diff = true;
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("uniform_int covers the range inclusively") {
  Rng rng(7);
  std::set<std::int64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto v = rng.uniform_int(-2, 3);
    CHECK(v >= -2);
    CHECK(v <= 3);
    seen.insert(v);
  }
  CHECK(seen.size() == 6);
  CHECK_THROWS_AS(rng.uniform_int(1, 0), ValidationError);
}

TEST_CASE("normal draws have roughly standard moments") {
  Rng rng(99);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sum2 += z * z;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("permutation is a permutation and deterministic") {
  Rng a(5), b(5);
  const auto pa = a.permutation(20);
  const auto pb = b.permutation(20);
  CHECK(pa == pb);
  std::set<int> seen(pa.begin(), pa.end());
  CHECK(seen.size() == 20);
  CHECK(*seen.begin() == 0);
  CHECK(*seen.rbegin() == 19);
}

TEST_CASE("mix_seed separates tags and is stable") {
  CHECK(mix_seed(42, 0) != mix_seed(42, 1));
  CHECK(mix_seed(42, 0) != mix_seed(43, 0));
  CHECK(mix_seed(42, 7) == mix_seed(42, 7));
}

TEST_CASE("parallel_for covers every index exactly once under both policies") {
  for (Exec policy : {Exec::serial, Exec::parallel}) {
    std::vector<int> hits(1000, 0);
    parallel_for(policy, 1000, [&](std::ptrdiff_t i) { hits[static_cast<std::size_t>(i)] += 1; });
    for (int h : hits) CHECK(h == 1);
  }
}

TEST_CASE("fnv1a64 is stable") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("breast/RandomForest") != fnv1a64("breast/AdaBoost"));
}
