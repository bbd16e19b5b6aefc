#include "llambo/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace llambo {

namespace {

double normalized_regret(double score, double y_best, double y_worst) {
  if (y_worst == y_best) return 0.0;
  return std::clamp((score - y_best) / (y_worst - y_best), 0.0, 1.0);
}

void check_paired(const std::vector<double>& truth, const std::vector<double>& pred,
                  const char* what) {
  if (truth.empty()) throw ValidationError(std::string(what) + ": empty input");
  if (truth.size() != pred.size())
    throw ValidationError(std::string(what) + ": size mismatch (" +
                          std::to_string(truth.size()) + " vs " + std::to_string(pred.size()) +
                          ")");
}

Eigen::MatrixXd sample_covariance(const std::vector<UnitPoint>& points) {
  if (points.size() < 2)
    throw ValidationError("covariance requires at least two points, got " +
                          std::to_string(points.size()));
  const auto n = static_cast<Eigen::Index>(points.size());
  const Eigen::Index d = points.front().coords.size();
  Eigen::MatrixXd X(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (points[static_cast<std::size_t>(i)].coords.size() != d)
      throw ValidationError("covariance: inconsistent point dimensions");
    X.row(i) = points[static_cast<std::size_t>(i)].coords;
  }
  const Eigen::RowVectorXd mean = X.colwise().mean();
  const Eigen::MatrixXd centered = X.rowwise() - mean;
  return centered.transpose() * centered / static_cast<double>(n - 1);
}

}  // namespace

RegretCurve regret_curve(const std::vector<double>& scores, double y_best, double y_worst) {
  if (y_worst < y_best)
    throw ValidationError("regret_curve: y_worst < y_best (" + std::to_string(y_worst) +
                          " < " + std::to_string(y_best) + ")");
  RegretCurve curve;
  curve.values.reserve(scores.size());
  double cummin = std::numeric_limits<double>::infinity();
  for (double s : scores) {
    cummin = std::min(cummin, s);
    curve.values.push_back(normalized_regret(cummin, y_best, y_worst));
  }
  return curve;
}

double nrmse(const std::vector<double>& truth, const std::vector<double>& pred) {
  check_paired(truth, pred, "nrmse");
  const auto [lo, hi] = std::minmax_element(truth.begin(), truth.end());
  const double range = *hi - *lo;
  if (range <= 0.0) throw ValidationError("nrmse: truth values have zero range");
  double sse = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    sse += (truth[i] - pred[i]) * (truth[i] - pred[i]);
  return std::sqrt(sse / static_cast<double>(truth.size())) / range;
}

double r_squared(const std::vector<double>& truth, const std::vector<double>& pred) {
  check_paired(truth, pred, "r_squared");
  const double mean =
      std::accumulate(truth.begin(), truth.end(), 0.0) / static_cast<double>(truth.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ss_res += (truth[i] - pred[i]) * (truth[i] - pred[i]);
    ss_tot += (truth[i] - mean) * (truth[i] - mean);
  }
  if (ss_tot <= 0.0) throw ValidationError("r_squared: truth values have zero variance");
  return 1.0 - ss_res / ss_tot;
}

Calibration calibration(const std::vector<PredictiveDistribution>& preds,
                        const std::vector<double>& truth, double alpha) {
  if (preds.empty()) throw ValidationError("calibration: empty input");
  if (preds.size() != truth.size())
    throw ValidationError("calibration: size mismatch (" + std::to_string(preds.size()) +
                          " vs " + std::to_string(truth.size()) + ")");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ValidationError("calibration: alpha must lie in (0, 1), got " + std::to_string(alpha));
  const double z = normal_quantile(0.5 * (1.0 + alpha));
  Calibration out;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double half = z * preds[i].std;
    if (std::abs(truth[i] - preds[i].mean) <= half) out.coverage += 1.0;
    out.sharpness += 2.0 * half;
  }
  out.coverage /= static_cast<double>(preds.size());
  out.sharpness /= static_cast<double>(preds.size());
  return out;
}

double generalized_variance(const std::vector<UnitPoint>& points) {
  return sample_covariance(points).determinant();
}

Eigen::MatrixXd correlation_matrix(const std::vector<UnitPoint>& points) {
  const Eigen::MatrixXd cov = sample_covariance(points);
  const Eigen::Index d = cov.rows();
  Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      if (i == j) continue;
      const double denom = std::sqrt(cov(i, i) * cov(j, j));
      corr(i, j) = denom > 0.0 ? cov(i, j) / denom : 0.0;
    }
  return corr;
}

DesignReport design_report(const std::vector<UnitPoint>& points) {
  DesignReport report;
  report.gen_variance = generalized_variance(points);
  report.corr = correlation_matrix(points);
  const Eigen::Index d = report.corr.rows();
  if (d > 1) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j)
        if (i != j) acc += std::abs(report.corr(i, j));
    report.mean_abs_corr = acc / static_cast<double>(d * (d - 1));
  }
  return report;
}

CandidateStats candidate_stats(const CandidateBatch& batch, const Task& task,
                               const TpeDensity& reference, double y_best, double y_worst) {
  if (batch.configs.empty()) throw ValidationError("candidate_stats: empty batch");
  CandidateStats stats;
  stats.best_regret = 1.0;
  std::vector<UnitPoint> points;
  points.reserve(batch.configs.size());
  for (const Config& cfg : batch.configs) {
    const double score = task.canonical(eval_objective(task, cfg));
    const double regret = normalized_regret(score, y_best, y_worst);
    stats.avg_regret += regret;
    stats.best_regret = std::min(stats.best_regret, regret);
    points.push_back(normalize(task.space(), cfg));
    stats.mean_loglik += reference.log_density(points.back().coords);
  }
  const auto n = static_cast<double>(batch.configs.size());
  stats.avg_regret /= n;
  stats.mean_loglik /= n;
  stats.gen_variance = points.size() >= 2 ? generalized_variance(points) : 0.0;
  return stats;
}

}  // namespace llambo
