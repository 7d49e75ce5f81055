#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace star::metrics {

/// Discrete predictive distribution on a sorted integer support.
struct DiscreteForecast {
  std::vector<long> support;
  Eigen::VectorXd probs;
};

/// Ranked probability score: sum of squared CDF gaps over the integer
/// lattice spanning both the support and the observation.
double rps(const DiscreteForecast& forecast, long observed);

struct EssResult {
  double ess = 0.0;
  bool degenerate = false;  // constant chain
};

/// Effective sample size with the initial-positive-sequence truncation of
/// the autocorrelation sum, capped at the chain length.
EssResult ess(const Eigen::VectorXd& chain);

struct IntervalMetrics {
  double meanWidth = 0.0;
  double coverage = 0.0;
};

/// Per-column equal-tailed empirical prediction intervals at the given
/// level; coverage is the fraction of observations inside.
IntervalMetrics interval_metrics(const Eigen::MatrixXi& draws, const Eigen::VectorXi& observed,
                                 double level);

struct RocResult {
  std::vector<std::pair<double, double>> curve;  // (fpr, tpr) points
  double auc = 0.0;
};

/// ROC curve and AUC via the midrank statistic; both classes required.
RocResult roc_auc(const Eigen::VectorXd& scores, const std::vector<int>& labels);

}  // namespace star::metrics
