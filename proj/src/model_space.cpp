#include "star/model_space.hpp"

#include <cmath>
#include <stdexcept>

namespace star::models {

namespace {
void validate(const CandidateSet& set) {
  if (set.candidates.empty()) throw std::invalid_argument("CandidateSet: need K >= 1");
  if (set.priorWeights.size() != static_cast<Eigen::Index>(set.candidates.size()))
    throw std::invalid_argument("CandidateSet: prior weight length mismatch");
  if (set.priorWeights.minCoeff() < 0.0 || !(set.priorWeights.sum() > 0.0))
    throw std::invalid_argument("CandidateSet: prior weights must be nonnegative with mass");
}
}  // namespace

ModelProbs posterior_model_probs(const CandidateSet& set, std::size_t nSamples, Rng& rng) {
  validate(set);
  const Eigen::Index k = static_cast<Eigen::Index>(set.size());
  ModelProbs out;
  out.logMargLik.resize(k);
  out.relErr.resize(k);
  Eigen::VectorXd logw(k);
  bool anyFinite = false;
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto ml = linear::marginal_likelihood(set.candidates[i].model, nSamples, rng);
    out.logMargLik[i] = ml.logValue;
    out.relErr[i] = ml.relErr;
    logw[i] = (ml.underflow || set.priorWeights[i] == 0.0)
                  ? -std::numeric_limits<double>::infinity()
                  : ml.logValue + std::log(set.priorWeights[i]);
    anyFinite = anyFinite || std::isfinite(logw[i]);
  }
  if (!anyFinite)
    throw std::runtime_error("posterior_model_probs: every marginal likelihood underflows");
  const double m = logw.maxCoeff();
  out.probs = (logw.array() - m).exp();
  out.probs /= out.probs.sum();

  out.selected = 0;
  for (Eigen::Index i = 1; i < k; ++i)
    if (out.probs[i] > out.probs[out.selected]) out.selected = static_cast<int>(i);

  // warn when the leading weights are within Monte Carlo resolution
  for (Eigen::Index i = 0; i < k; ++i) {
    if (i == out.selected) continue;
    const double gap = std::abs(out.probs[out.selected] - out.probs[i]);
    const double noise = 3.0 * (out.relErr[out.selected] + out.relErr[i]) *
                         std::max(out.probs[out.selected], out.probs[i]);
    if (gap <= noise) out.closeCall = true;
  }
  return out;
}

AveragedPrediction model_averaged_predict(const CandidateSet& set,
                                          const linear::PredictiveRequest& req,
                                          std::size_t nSamples, Rng& rng) {
  validate(set);
  const ModelProbs probs = posterior_model_probs(set, nSamples, rng);
  const std::size_t k = set.size();
  const std::size_t count = req.count;

  // categorical indices first, then per-candidate batches
  std::vector<int> idx(count);
  std::vector<std::size_t> perModel(k, 0);
  for (std::size_t s = 0; s < count; ++s) {
    const double u = runif(rng);
    double acc = 0.0;
    int pick = static_cast<int>(k) - 1;
    for (std::size_t i = 0; i < k; ++i) {
      acc += probs.probs[static_cast<Eigen::Index>(i)];
      if (u <= acc) {
        pick = static_cast<int>(i);
        break;
      }
    }
    idx[s] = pick;
    ++perModel[static_cast<std::size_t>(pick)];
  }

  Eigen::Index nt = -1;
  std::vector<Eigen::MatrixXi> batches(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (perModel[i] == 0) continue;
    const Eigen::MatrixXd& xt =
        set.candidates[i].xtilde.size() > 0 ? set.candidates[i].xtilde : req.xtilde;
    linear::PredictiveRequest sub{xt, perModel[i]};
    batches[i] = linear::predict_via_posterior(set.candidates[i].model, sub, rng);
    if (nt < 0) nt = batches[i].cols();
    if (batches[i].cols() != nt)
      throw std::invalid_argument("model_averaged_predict: candidates disagree on ntilde");
  }
  if (nt < 0) nt = req.xtilde.rows();

  AveragedPrediction out;
  out.draws.resize(count, nt);
  out.modelDraws = idx;
  std::vector<std::size_t> used(k, 0);
  for (std::size_t s = 0; s < count; ++s) {
    const auto i = static_cast<std::size_t>(idx[s]);
    out.draws.row(static_cast<Eigen::Index>(s)) =
        batches[i].row(static_cast<Eigen::Index>(used[i]++));
  }
  return out;
}

}  // namespace star::models
