#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "llambo/surrogate.hpp"

namespace llambo {

namespace {

double logsumexp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace

namespace tpe_detail {

TpeDensity make_density(const std::vector<Eigen::VectorXd>& points, int dim, TpeMode mode) {
  const int m = static_cast<int>(points.size());
  if (m < 1) throw ValidationError("density needs at least one point");

  TpeDensity density;
  density.mode = mode;
  density.centers.resize(m, dim);
  for (int i = 0; i < m; ++i) density.centers.row(i) = points[static_cast<std::size_t>(i)].transpose();

  // Scott's rule: 1D bandwidth sigma * m^(-1/5); multivariate kernel
  // covariance m^(-2/(d+4)) * sample covariance.
  const double scott_1d = std::pow(static_cast<double>(m), -0.2);
  const double scott_mv = std::pow(static_cast<double>(m), -2.0 / (dim + 4.0));
  // Exploration floor a la hyperopt: widths are clipped below at
  // range/min(100, m+2), else a kernel fitted to a tight cluster of good
  // points collapses to a needle and the sampler re-proposes one point
  // forever.
  const double lo = 1.0 / std::min(100.0, static_cast<double>(m) + 2.0);

  if (mode == TpeMode::independent) {
    density.bandwidth.resize(dim);
    for (int d = 0; d < dim; ++d) {
      if (m == 1) {
        density.bandwidth[d] = 0.25;  // singleton set: fixed prior width
        continue;
      }
      const double mean = density.centers.col(d).mean();
      const double var =
          (density.centers.col(d).array() - mean).square().sum() / (m - 1.0);
      density.bandwidth[d] = std::max(std::sqrt(var) * scott_1d, lo);
    }
    return density;
  }

  if (m == 1) {
    density.chol = Eigen::MatrixXd::Identity(dim, dim) * 0.25;
    density.diagonal_fallback = true;
    return density;
  }
  const Eigen::RowVectorXd mean = density.centers.colwise().mean();
  const Eigen::MatrixXd centered = density.centers.rowwise() - mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered / (m - 1.0);
  Eigen::MatrixXd scaled = scott_mv * cov;
  Eigen::LLT<Eigen::MatrixXd> llt(scaled);
  if (llt.info() == Eigen::Success &&
      llt.matrixLLT().diagonal().minCoeff() > 1e-8) {
    // Raising diagonal entries to the floor keeps the matrix positive
    // definite, so this second factorization cannot fail.
    scaled.diagonal() = scaled.diagonal().cwiseMax(lo * lo);
    density.chol = Eigen::LLT<Eigen::MatrixXd>(scaled).matrixL();
    return density;
  }
  // Degenerate covariance (collinear points, constant dimensions): keep only
  // the diagonal, with the per-dimension std floored at 1e-3.
  Eigen::VectorXd diag(dim);
  for (int d = 0; d < dim; ++d)
    diag[d] = std::max(std::max(std::sqrt(cov(d, d)), 1e-3) * std::sqrt(scott_mv), lo);
  density.chol = diag.asDiagonal();
  density.diagonal_fallback = true;
  return density;
}

}  // namespace tpe_detail

double TpeDensity::log_density(const Eigen::VectorXd& u) const {
  const int m = static_cast<int>(centers.rows());
  const int d = static_cast<int>(centers.cols());
  constexpr double kLog2Pi = 1.8378770664093454;  // log(2*pi)

  // work[m] is the uniform prior component (density 1 on the unit range).
  if (mode == TpeMode::independent) {
    // Product over dimensions of per-dimension 1D mixtures.
    double total = 0.0;
    Eigen::VectorXd work(m + 1);
    for (int dim = 0; dim < d; ++dim) {
      const double h = bandwidth[dim];
      for (int i = 0; i < m; ++i) {
        const double z = (u[dim] - centers(i, dim)) / h;
        work[i] = -0.5 * z * z - std::log(h) - 0.5 * kLog2Pi;
      }
      work[m] = 0.0;
      total += logsumexp(work) - std::log(static_cast<double>(m + 1));
    }
    return total;
  }

  // Full-covariance Gaussian mixture with shared kernel covariance L L^T.
  const double log_det = chol.diagonal().array().log().sum();
  Eigen::VectorXd work(m + 1);
  for (int i = 0; i < m; ++i) {
    const Eigen::VectorXd diff = u - centers.row(i).transpose();
    const Eigen::VectorXd z =
        chol.triangularView<Eigen::Lower>().solve(diff);
    work[i] = -0.5 * z.squaredNorm() - log_det - 0.5 * d * kLog2Pi;
  }
  work[m] = 0.0;
  return logsumexp(work) - std::log(static_cast<double>(m + 1));
}

Eigen::VectorXd TpeDensity::sample(Rng& rng) const {
  const int m = static_cast<int>(centers.rows());
  const int d = static_cast<int>(centers.cols());
  Eigen::VectorXd u(d);
  // Component index m draws from the uniform prior over the unit range.
  if (mode == TpeMode::independent) {
    for (int dim = 0; dim < d; ++dim) {
      const auto i = static_cast<int>(rng.uniform_int(0, m));
      u[dim] = i == m ? rng.uniform01()
                      : centers(i, dim) + bandwidth[dim] * rng.normal();
    }
  } else {
    const auto i = static_cast<int>(rng.uniform_int(0, m));
    if (i == m) {
      for (int dim = 0; dim < d; ++dim) u[dim] = rng.uniform01();
    } else {
      Eigen::VectorXd z(d);
      for (int dim = 0; dim < d; ++dim) z[dim] = rng.normal();
      u = centers.row(i).transpose() + chol * z;
    }
  }
  return u.cwiseMax(0.0).cwiseMin(1.0);
}

TpeModel tpe_fit(const std::vector<UnitPoint>& points, const std::vector<double>& scores,
                 double gamma, TpeMode mode, std::uint64_t seed) {
  (void)seed;  // reserved for stochastic bandwidth rules; the fit is deterministic
  if (points.size() < 4) throw ValidationError("tpe_fit needs at least 4 observations");
  if (points.size() != scores.size())
    throw ValidationError("tpe_fit: points and scores must have equal length");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("tpe_fit: gamma must be in (0, 1)");

  const int n = static_cast<int>(points.size());
  const int d = static_cast<int>(points[0].dim());
  for (const auto& p : points)
    if (static_cast<int>(p.dim()) != d)
      throw ValidationError("tpe_fit: inconsistent point dimensions");

  // Rank by score (canonical minimization), stable in history order.
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return scores[static_cast<std::size_t>(a)] < scores[static_cast<std::size_t>(b)];
  });

  const int n_good = std::clamp(
      static_cast<int>(std::ceil(gamma * n)), 1, n - 1);

  std::vector<Eigen::VectorXd> good_pts, bad_pts;
  TpeModel model;
  model.gamma = gamma;
  model.mode = mode;
  for (int rank = 0; rank < n; ++rank) {
    const int idx = order[static_cast<std::size_t>(rank)];
    if (rank < n_good) {
      good_pts.push_back(points[static_cast<std::size_t>(idx)].coords);
      model.good_indices.push_back(idx);
    } else {
      bad_pts.push_back(points[static_cast<std::size_t>(idx)].coords);
    }
  }
  model.good = tpe_detail::make_density(good_pts, d, mode);
  model.bad = tpe_detail::make_density(bad_pts, d, mode);
  return model;
}

double tpe_score(const TpeModel& m, const UnitPoint& u) {
  return m.good.log_density(u.coords) - m.bad.log_density(u.coords);
}

std::vector<double> tpe_score_batch(const TpeModel& m, const std::vector<UnitPoint>& us,
                                    Exec exec) {
  std::vector<double> out(us.size());
  parallel_for(exec, static_cast<std::ptrdiff_t>(us.size()), [&](std::ptrdiff_t i) {
    out[static_cast<std::size_t>(i)] = tpe_score(m, us[static_cast<std::size_t>(i)]);
  });
  return out;
}

}  // namespace llambo
