#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "llambo/surrogate.hpp"

namespace llambo {

double nlpd(const PredictiveDistribution& pred, double y) {
  if (!(pred.std > 0.0)) throw ValidationError("nlpd needs std > 0 (apply the 1e-6 floor upstream)");
  const double z = (y - pred.mean) / pred.std;
  return 0.5 * std::log(2.0 * std::numbers::pi * pred.std * pred.std) + 0.5 * z * z;
}

namespace {

constexpr double kSqrt5 = 2.23606797749978969;

// Hyperparameter bounds in log space: length-scales [1e-3, 1e3], signal std
// [1e-2, 1e2], noise variance [1e-10, 1e-1] (unit-cube inputs and standardized
// targets make these safe universal boxes; the low noise floor lets the model
// interpolate noiseless data to ~1e-8).
struct Bounds {
  double ls_lo = std::log(1e-3), ls_hi = std::log(1e3);
  double sf_lo = std::log(1e-2), sf_hi = std::log(1e2);
  double sn_lo = 0.5 * std::log(1e-10), sn_hi = 0.5 * std::log(1e-1);

  void clamp(Eigen::VectorXd& theta) const {
    const int d = static_cast<int>(theta.size()) - 2;
    for (int i = 0; i < d; ++i) theta[i] = std::clamp(theta[i], ls_lo, ls_hi);
    theta[d] = std::clamp(theta[d], sf_lo, sf_hi);
    theta[d + 1] = std::clamp(theta[d + 1], sn_lo, sn_hi);
  }
};

// Matern-5/2 correlation and the radial factor of its derivative:
//   f(r)  = (1 + sqrt5 r + 5 r^2/3) exp(-sqrt5 r)
//   df/dr = -(5 r / 3)(1 + sqrt5 r) exp(-sqrt5 r)
// d f / d log(ls_d) = (5/3)(1 + sqrt5 r) exp(-sqrt5 r) * q_d with q_d = (dx_d/ls_d)^2,
// which stays finite as r -> 0.
double matern52(double r) {
  return (1.0 + kSqrt5 * r + 5.0 / 3.0 * r * r) * std::exp(-kSqrt5 * r);
}

// Builds K = sf^2 f(r) + (sn^2 + jitter) I and factorizes it, escalating the
// jitter by decades from 1e-10 to 1e-4 until the Cholesky succeeds.
struct Factorized {
  Eigen::MatrixXd corr;  // f(r_ij), kept for gradient assembly
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
};

Factorized factorize(const Eigen::MatrixXd& X, const Eigen::VectorXd& theta) {
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  const Eigen::VectorXd inv_ls = (-theta.head(d)).array().exp();
  const double sf2 = std::exp(2.0 * theta[d]);
  const double sn2 = std::exp(2.0 * theta[d + 1]);

  Factorized out;
  out.corr.resize(n, n);
  for (int i = 0; i < n; ++i) {
    out.corr(i, i) = 1.0;
    for (int j = i + 1; j < n; ++j) {
      const double r = ((X.row(i) - X.row(j)).transpose().array() * inv_ls.array())
                           .matrix()
                           .norm();
      out.corr(i, j) = out.corr(j, i) = matern52(r);
    }
  }

  for (double jitter = 1e-10; jitter <= 1.000001e-4; jitter *= 10.0) {
    Eigen::MatrixXd K = sf2 * out.corr;
    K.diagonal().array() += sn2 + jitter;
    out.llt.compute(K);
    if (out.llt.info() == Eigen::Success) {
      out.jitter = jitter;
      return out;
    }
  }
  throw FitError("kernel matrix not positive definite at any jitter level up to 1e-4");
}

}  // namespace

namespace gp_detail {

Eval lml_with_grad(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                   const Eigen::VectorXd& theta) {
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  if (theta.size() != d + 2) throw ValidationError("theta must have d + 2 entries");

  const Factorized fact = factorize(X, theta);
  const Eigen::VectorXd inv_ls = (-theta.head(d)).array().exp();
  const double sf2 = std::exp(2.0 * theta[d]);
  const double sn2 = std::exp(2.0 * theta[d + 1]);

  const Eigen::VectorXd alpha = fact.llt.solve(y);
  Eval out;
  out.lml = -0.5 * y.dot(alpha) -
            fact.llt.matrixLLT().diagonal().array().log().sum() -
            0.5 * n * std::log(2.0 * std::numbers::pi);

  // d lml / d theta_j = 0.5 tr((alpha alpha^T - K^{-1}) dK/dtheta_j)
  const Eigen::MatrixXd Kinv = fact.llt.solve(Eigen::MatrixXd::Identity(n, n));
  const Eigen::MatrixXd A = alpha * alpha.transpose() - Kinv;

  out.grad.resize(d + 2);
  out.grad.head(d).setZero();
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const Eigen::VectorXd diff =
          ((X.row(i) - X.row(j)).transpose().array() * inv_ls.array()).matrix();
      const double r = diff.norm();
      // dK/dlog(ls_dim) = sf^2 (5/3)(1 + sqrt5 r) exp(-sqrt5 r) * diff_dim^2
      const double radial = sf2 * (5.0 / 3.0) * (1.0 + kSqrt5 * r) * std::exp(-kSqrt5 * r);
      // 0.5 * (pair + its mirror) = full off-diagonal contribution; diagonal is zero.
      out.grad.head(d) += (A(i, j) * radial) * diff.array().square().matrix();
    }
  }
  out.grad[d] = 0.5 * (A.array() * (2.0 * sf2 * fact.corr).array()).sum();
  out.grad[d + 1] = 0.5 * A.trace() * 2.0 * sn2;
  return out;
}

}  // namespace gp_detail

GpModel gp_fit(const std::vector<UnitPoint>& points, const std::vector<double>& scores,
               std::uint64_t seed, Exec exec) {
  if (points.size() < 2) throw ValidationError("gp_fit needs at least 2 observations");
  if (points.size() != scores.size())
    throw ValidationError("gp_fit: points and scores must have equal length");
  const int n = static_cast<int>(points.size());
  const int d = static_cast<int>(points[0].dim());

  Eigen::MatrixXd X(n, d);
  Eigen::VectorXd y_raw(n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(points[static_cast<std::size_t>(i)].dim()) != d)
      throw ValidationError("gp_fit: inconsistent point dimensions");
    X.row(i) = points[static_cast<std::size_t>(i)].coords.transpose();
    y_raw[i] = scores[static_cast<std::size_t>(i)];
  }

  const double y_mean = y_raw.mean();
  double y_scale = std::sqrt((y_raw.array() - y_mean).square().sum() / n);
  if (y_scale < 1e-12) y_scale = 1.0;  // constant targets: fit the zero function
  const Eigen::VectorXd y = (y_raw.array() - y_mean) / y_scale;

  const Bounds bounds;
  constexpr int kRestarts = 8;
  constexpr int kIters = 120;
  constexpr double kLearningRate = 0.08;

  // Deterministic restart initializations, drawn before any parallel work.
  std::vector<Eigen::VectorXd> inits;
  {
    Rng rng(mix_seed(seed, 0x6f17ULL));
    Eigen::VectorXd theta0(d + 2);
    theta0.head(d).setConstant(std::log(0.3));
    theta0[d] = 0.0;               // signal std 1 (standardized targets)
    theta0[d + 1] = std::log(0.05);
    inits.push_back(theta0);
    for (int r = 1; r < kRestarts; ++r) {
      Eigen::VectorXd theta(d + 2);
      for (int i = 0; i < d; ++i) theta[i] = rng.uniform(std::log(0.05), std::log(2.0));
      theta[d] = rng.uniform(std::log(0.2), std::log(2.0));
      theta[d + 1] = rng.uniform(std::log(1e-3), std::log(0.3));
      inits.push_back(theta);
    }
  }

  std::vector<double> best_lml(kRestarts, -std::numeric_limits<double>::infinity());
  std::vector<Eigen::VectorXd> best_theta(kRestarts);

  parallel_for(exec, kRestarts, [&](std::ptrdiff_t r) {
    Eigen::VectorXd theta = inits[static_cast<std::size_t>(r)];
    Eigen::VectorXd m = Eigen::VectorXd::Zero(d + 2);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(d + 2);
    double local_best = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd local_theta = theta;
    try {
      for (int it = 0; it < kIters; ++it) {
        const auto eval = gp_detail::lml_with_grad(X, y, theta);
        if (eval.lml > local_best) {
          local_best = eval.lml;
          local_theta = theta;
        }
        // Adam ascent step with projection back into the bounds.
        const double t = it + 1;
        m = 0.9 * m + 0.1 * eval.grad;
        v = 0.999 * v.array() + 0.001 * eval.grad.array().square();
        const Eigen::VectorXd m_hat = m / (1.0 - std::pow(0.9, t));
        const Eigen::VectorXd v_hat = v / (1.0 - std::pow(0.999, t));
        theta += kLearningRate * (m_hat.array() / (v_hat.array().sqrt() + 1e-8)).matrix();
        bounds.clamp(theta);
      }
    } catch (const FitError&) {
      // Keep whatever this restart reached before the breakdown.
    }
    best_lml[static_cast<std::size_t>(r)] = local_best;
    best_theta[static_cast<std::size_t>(r)] = local_theta;
  });

  int winner = -1;
  for (int r = 0; r < kRestarts; ++r)
    if (winner < 0 || best_lml[static_cast<std::size_t>(r)] >
                          best_lml[static_cast<std::size_t>(winner)])
      winner = r;
  if (!std::isfinite(best_lml[static_cast<std::size_t>(winner)]))
    throw FitError("all restarts failed to factorize the kernel matrix");

  const Eigen::VectorXd theta = best_theta[static_cast<std::size_t>(winner)];
  const Factorized fact = factorize(X, theta);

  GpModel model;
  model.X = std::move(X);
  model.alpha = fact.llt.solve(y);
  model.chol = fact.llt;
  model.length = theta.head(d).array().exp();
  model.signal_std = std::exp(theta[d]);
  model.noise_std = std::exp(theta[d + 1]);
  model.jitter = fact.jitter;
  model.y_mean = y_mean;
  model.y_scale = y_scale;
  model.lml = best_lml[static_cast<std::size_t>(winner)];
  return model;
}

PredictiveDistribution gp_predict(const GpModel& m, const UnitPoint& u) {
  const int n = static_cast<int>(m.X.rows());
  const int d = static_cast<int>(m.X.cols());
  if (static_cast<int>(u.dim()) != d)
    throw ValidationError("gp_predict: point dimension mismatch");

  const double sf2 = m.signal_std * m.signal_std;
  Eigen::VectorXd k_star(n);
  for (int i = 0; i < n; ++i) {
    const double r =
        ((m.X.row(i).transpose() - u.coords).array() / m.length.array()).matrix().norm();
    k_star[i] = sf2 * matern52(r);
  }

  const double mean_std = k_star.dot(m.alpha);
  const Eigen::VectorXd w = m.chol.solve(k_star);
  double var = sf2 + m.noise_std * m.noise_std - k_star.dot(w);
  var = std::max(var, 0.0);

  return {m.y_mean + m.y_scale * mean_std, m.y_scale * std::sqrt(var)};
}

std::vector<PredictiveDistribution> gp_predict_batch(const GpModel& m,
                                                     const std::vector<UnitPoint>& us,
                                                     Exec exec) {
  std::vector<PredictiveDistribution> out(us.size());
  parallel_for(exec, static_cast<std::ptrdiff_t>(us.size()),
               [&](std::ptrdiff_t i) { out[static_cast<std::size_t>(i)] =
                                           gp_predict(m, us[static_cast<std::size_t>(i)]); });
  return out;
}

}  // namespace llambo
