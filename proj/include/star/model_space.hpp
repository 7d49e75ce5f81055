#pragma once

#include <Eigen/Dense>
#include <vector>

#include "star/star_linear.hpp"

namespace star::models {

/// One candidate: a fitted linear (or reparametrized nonlinear) model plus
/// an optional per-candidate predictive design (used when candidates differ
/// in basis dimension).
struct Candidate {
  linear::StarLinearModel model;
  Eigen::MatrixXd xtilde;  // empty: use the request's design
};

struct CandidateSet {
  std::vector<Candidate> candidates;
  Eigen::VectorXd priorWeights;  // normalized internally

  std::size_t size() const { return candidates.size(); }
};

struct ModelProbs {
  Eigen::VectorXd probs;      // posterior model probabilities, sum to 1
  Eigen::VectorXd logMargLik; // per-candidate log marginal likelihoods
  Eigen::VectorXd relErr;     // per-candidate Monte Carlo relative errors
  bool closeCall = false;     // leading weights within 3 combined relErr
  int selected = 0;           // argmax, lowest index on ties
};

/// Posterior model probabilities from per-candidate marginal likelihoods,
/// normalized with max-subtraction. Every candidate gets the same sample
/// budget.
ModelProbs posterior_model_probs(const CandidateSet& set, std::size_t nSamples, Rng& rng);

struct AveragedPrediction {
  Eigen::MatrixXi draws;          // count x ntilde
  std::vector<int> modelDraws;    // candidate index per draw
};

/// Joint draws of (model index, predictive vector): categorical index from
/// the posterior weights, then the selected candidate's predictive sampler.
AveragedPrediction model_averaged_predict(const CandidateSet& set,
                                          const linear::PredictiveRequest& req,
                                          std::size_t nSamples, Rng& rng);

}  // namespace star::models
