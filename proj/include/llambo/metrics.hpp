#pragma once

#include <string>
#include <vector>

#include "llambo/acquire.hpp"
#include "llambo/bench.hpp"

namespace llambo {

struct RegretCurve {
  std::vector<double> values;
};

// Normalized best-so-far regret for minimization-oriented scores:
//   r_t = (min(scores[0..t]) - y_best) / (y_worst - y_best), clamped to [0, 1].
// Equal bounds yield an all-zero curve; y_worst < y_best is an error.
RegretCurve regret_curve(const std::vector<double>& scores, double y_best, double y_worst);

// Root-mean-square error divided by the range of the truth values.
double nrmse(const std::vector<double>& truth, const std::vector<double>& pred);

// Coefficient of determination, 1 - SS_res / SS_tot.
double r_squared(const std::vector<double>& truth, const std::vector<double>& pred);

struct Calibration {
  double coverage = 0.0;   // fraction of truths inside the central alpha interval
  double sharpness = 0.0;  // mean width of that interval
};
Calibration calibration(const std::vector<PredictiveDistribution>& preds,
                        const std::vector<double>& truth, double alpha = 0.95);

// Determinant of the sample covariance (n - 1 normalization) of the points.
double generalized_variance(const std::vector<UnitPoint>& points);

// Pearson correlation matrix; dimensions with zero variance contribute zero
// off-diagonal entries and a unit diagonal.
Eigen::MatrixXd correlation_matrix(const std::vector<UnitPoint>& points);

struct DesignReport {
  double gen_variance = 0.0;
  Eigen::MatrixXd corr;
  double mean_abs_corr = 0.0;  // mean absolute off-diagonal correlation
};
DesignReport design_report(const std::vector<UnitPoint>& points);

struct SurrogateReport {
  std::string model;
  int n_train = 0;
  double nrmse = 0.0;
  double r2 = 0.0;
  double nlpd_mean = 0.0;
  double coverage = 0.0;
  double sharpness = 0.0;
  bool degenerate = false;  // a metric was undefined on this split
  int split_id = 0;
};

struct CandidateStats {
  double avg_regret = 0.0;
  double best_regret = 0.0;
  double gen_variance = 0.0;
  double mean_loglik = 0.0;  // mean log-density under a reference model of good points
};

// Probes the true objective at every candidate. Bounds are in canonical
// (minimization) orientation; regrets are normalized like regret_curve.
CandidateStats candidate_stats(const CandidateBatch& batch, const Task& task,
                               const TpeDensity& reference, double y_best, double y_worst);

}  // namespace llambo
