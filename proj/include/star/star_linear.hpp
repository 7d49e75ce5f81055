#pragma once

#include <Eigen/Dense>
#include <variant>
#include <vector>

#include "star/discretization.hpp"
#include "star/selection_normal.hpp"

namespace star::linear {

/// Gaussian coefficient prior N(muTheta, sigmaTheta).
struct GeneralPrior {
  Eigen::VectorXd muTheta;
  Eigen::MatrixXd sigmaTheta;
};

/// g-prior: sigmaTheta = psi * sigma^2 * (X'X)^{-1}; zero-length muTheta
/// means a zero prior mean.
struct GPrior {
  double psi = 1000.0;
  Eigen::VectorXd muTheta;
};

/// Latent Gaussian linear regression observed through a transformation and a
/// rounding operator.
struct StarLinearModel {
  Eigen::MatrixXd X;
  Eigen::VectorXi y;
  discrete::RoundingScheme scheme;
  discrete::Transformation transform;
  std::variant<GeneralPrior, GPrior> prior;
  double sigma = 1.0;

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index p() const { return X.cols(); }
  bool is_gprior() const { return std::holds_alternative<GPrior>(prior); }

  Eigen::VectorXd prior_mean() const;
  /// Materialized prior covariance (psi sigma^2 (X'X)^{-1} under the g-prior).
  Eigen::MatrixXd prior_cov() const;
};

struct PredictiveRequest {
  Eigen::MatrixXd xtilde;
  std::size_t count = 1000;
};

/// Shape, support, and prior checks shared by every operation; throws
/// std::invalid_argument on violation.
void validate_model(const StarLinearModel& model);

/// The posterior as a selection normal with region g(A_y).
selnorm::SelectionNormal posterior(const StarLinearModel& model);

/// Direct posterior draws under the g-prior (truncated V0, whitened V1, and
/// the (X'X)^{-1} X' map); count x p.
Eigen::MatrixXd sample_posterior_gprior(const StarLinearModel& model, std::size_t count,
                                        Rng& rng);

/// E(theta | y) from the closed-form map with the truncated mean of V0
/// estimated by Monte Carlo.
Eigen::VectorXd posterior_mean_gprior(const StarLinearModel& model, std::size_t nSamples,
                                      Rng& rng);

/// Predictive draws through posterior coefficient draws.
Eigen::MatrixXi predict_via_posterior(const StarLinearModel& model, const PredictiveRequest& req,
                                      Rng& rng);

/// Latent predictive distribution [z~ | y] at req.xtilde.
selnorm::SelectionNormal latent_predictive(const StarLinearModel& model,
                                           const PredictiveRequest& req);

/// Joint predictive draws under the g-prior without posterior draws.
Eigen::MatrixXi predict_gprior(const StarLinearModel& model, const PredictiveRequest& req,
                               Rng& rng);

struct PmfResult {
  std::vector<long> support;
  Eigen::VectorXd probs;   // renormalized over the requested support
  double rawSum = 0.0;     // sum of the unnormalized entries
  double relErr = 0.0;     // worst per-entry relative standard error
};

/// Analytic predictive pmf at one covariate row over the requested support.
PmfResult predictive_pmf(const StarLinearModel& model, const Eigen::VectorXd& xtilde,
                         const std::vector<long>& support, std::size_t nSamples, Rng& rng);

/// E(y~ | y) over the requested support.
double point_predict(const StarLinearModel& model, const Eigen::VectorXd& xtilde,
                     const std::vector<long>& support, std::size_t nSamples, Rng& rng);

struct LogMarginal {
  double logValue = 0.0;
  double relErr = 0.0;
  bool underflow = false;
};

/// log pr(y): the box probability of g(A_y) under the latent marginal.
LogMarginal marginal_likelihood(const StarLinearModel& model, std::size_t nSamples, Rng& rng);

/// Deterministic noise-scale estimate: least squares of interval pseudo-data
/// (midpoints, or nearest finite endpoint +- one median finite width) on X.
double estimate_sigma(const Eigen::MatrixXd& x, const Eigen::VectorXi& y,
                      const discrete::RoundingScheme& scheme,
                      const discrete::Transformation& transform);

/// Data-augmentation Gibbs baseline: alternates truncated latent draws and
/// the conjugate coefficient update; returns post burn-in draws.
Eigen::MatrixXd gibbs_da_baseline(const StarLinearModel& model, std::size_t count,
                                  std::size_t burnin, Rng& rng);

/// Default bounded pmf support: the observed range extended by 10 sample
/// standard deviations, clipped to the scheme bounds.
std::vector<long> default_support(const StarLinearModel& model);

}  // namespace star::linear
