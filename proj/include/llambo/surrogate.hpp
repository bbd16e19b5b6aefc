#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "llambo/parallel.hpp"
#include "llambo/space.hpp"

namespace llambo {

// The Gaussian predictive contract every surrogate emits; all calibration
// metrics consume this shape.
struct PredictiveDistribution {
  double mean = 0.0;
  double std = 0.0;
};

// Negative Gaussian log predictive density; lower is better.
double nlpd(const PredictiveDistribution& pred, double y);

// --- Gaussian process --------------------------------------------------------

// Matern-5/2 kernel with per-dimension length-scales; targets standardized
// inside the fit and de-standardized on prediction.
struct GpModel {
  Eigen::MatrixXd X;            // n x d training inputs in the unit cube
  Eigen::VectorXd alpha;        // K^{-1} y (standardized targets)
  Eigen::LLT<Eigen::MatrixXd> chol;
  Eigen::VectorXd length;       // per-dimension length-scales
  double signal_std = 1.0;
  double noise_std = 1e-2;
  double jitter = 0.0;
  double y_mean = 0.0;
  double y_scale = 1.0;
  double lml = 0.0;             // log marginal likelihood at the chosen setting
};

GpModel gp_fit(const std::vector<UnitPoint>& points, const std::vector<double>& scores,
               std::uint64_t seed = 0, Exec exec = Exec::parallel);
PredictiveDistribution gp_predict(const GpModel& m, const UnitPoint& u);
std::vector<PredictiveDistribution> gp_predict_batch(const GpModel& m,
                                                     const std::vector<UnitPoint>& us,
                                                     Exec exec = Exec::parallel);

namespace gp_detail {

struct Eval {
  double lml = 0.0;
  Eigen::VectorXd grad;  // d(lml)/d(theta), theta = [log length..., log signal, log noise]
};

// Log marginal likelihood and its analytic gradient at theta, for standardized
// targets.  Exposed so tests can check the gradient against finite differences.
Eval lml_with_grad(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                   const Eigen::VectorXd& theta);

}  // namespace gp_detail

// --- random forest -----------------------------------------------------------

struct TreeNode {
  int feature = -1;        // -1 marks a leaf
  double threshold = 0.0;  // go left if x[feature] <= threshold
  int left = -1;
  int right = -1;
  double value = 0.0;      // leaf prediction
};

struct Tree {
  std::vector<TreeNode> nodes;   // nodes[0] is the root
  std::vector<int> inbag;        // bootstrap multiplicity per training row
};

struct ForestModel {
  std::vector<Tree> trees;
  Eigen::MatrixXd X;  // kept for out-of-bag analysis
  Eigen::VectorXd y;
};

ForestModel forest_fit(const std::vector<UnitPoint>& points, const std::vector<double>& scores,
                       int n_trees, std::uint64_t seed, Exec exec = Exec::parallel);
PredictiveDistribution forest_predict(const ForestModel& m, const UnitPoint& u);
double tree_predict(const Tree& tree, const Eigen::VectorXd& u);

// --- tree-structured Parzen estimator ------------------------------------------

enum class TpeMode { independent, multivariate };

// Gaussian KDE over a point set; either a product of per-dimension 1D
// mixtures (independent) or a full-covariance mixture (multivariate).
// Each mixture carries one extra uniform component over the unit range
// (weight 1/(m+1), as in Optuna's consider_prior): it keeps the good/bad
// log-ratio bounded far from all observations and preserves exploration
// when the fitted kernels are narrow.
struct TpeDensity {
  TpeMode mode = TpeMode::independent;
  Eigen::MatrixXd centers;       // m x d
  Eigen::VectorXd bandwidth;     // per-dimension (independent mode)
  Eigen::MatrixXd chol;          // lower Cholesky of the kernel covariance (multivariate)
  bool diagonal_fallback = false;

  double log_density(const Eigen::VectorXd& u) const;
  Eigen::VectorXd sample(Rng& rng) const;  // clamped to the unit cube
};

struct TpeModel {
  TpeDensity good;
  TpeDensity bad;
  double gamma = 0.25;
  TpeMode mode = TpeMode::independent;
  std::vector<int> good_indices;  // indices into the fitted history, best first
};

// Splits the history at the best max(1, ceil(gamma*n)) observations
// (canonical minimization) and fits one density per side.  `seed` is reserved
// for future stochastic bandwidth rules; the fit itself is deterministic.
TpeModel tpe_fit(const std::vector<UnitPoint>& points, const std::vector<double>& scores,
                 double gamma, TpeMode mode, std::uint64_t seed = 0);

// log g(u) - log b(u); higher means more promising.
double tpe_score(const TpeModel& m, const UnitPoint& u);
std::vector<double> tpe_score_batch(const TpeModel& m, const std::vector<UnitPoint>& us,
                                    Exec exec = Exec::parallel);

namespace tpe_detail {
// Fits a single density over a point set (used by tpe_fit; exposed for tests).
TpeDensity make_density(const std::vector<Eigen::VectorXd>& points, int dim, TpeMode mode);
}  // namespace tpe_detail

}  // namespace llambo
