#include "star/eval_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace star::metrics {

double rps(const DiscreteForecast& forecast, long observed) {
  const std::size_t m = forecast.support.size();
  if (m == 0 || forecast.probs.size() != static_cast<Eigen::Index>(m))
    throw std::invalid_argument("rps: malformed forecast");
  for (std::size_t k = 1; k < m; ++k)
    if (forecast.support[k] <= forecast.support[k - 1])
      throw std::invalid_argument("rps: support must be sorted ascending");
  if (forecast.probs.minCoeff() < -1e-12 ||
      std::abs(forecast.probs.sum() - 1.0) > 1e-9)
    throw std::invalid_argument("rps: probabilities must be nonnegative and sum to one");

  const long lo = std::min(forecast.support.front(), observed);
  const long hi = std::max(forecast.support.back(), observed);
  double cdf = 0.0, score = 0.0;
  std::size_t k = 0;
  for (long j = lo; j <= hi; ++j) {
    while (k < m && forecast.support[k] <= j) cdf += forecast.probs[static_cast<Eigen::Index>(k++)];
    const double step = (observed <= j) ? 1.0 : 0.0;
    score += (cdf - step) * (cdf - step);
  }
  return score;
}

EssResult ess(const Eigen::VectorXd& chain) {
  const Eigen::Index n = chain.size();
  if (n < 10) throw std::invalid_argument("ess: chain too short");
  const double mean = chain.mean();
  const Eigen::VectorXd c = chain.array() - mean;
  const double gamma0 = c.squaredNorm() / static_cast<double>(n);
  if (gamma0 <= 0.0) return {static_cast<double>(n), true};

  auto gamma_at = [&](Eigen::Index t) {
    double s = 0.0;
    for (Eigen::Index i = 0; i + t < n; ++i) s += c[i] * c[i + t];
    return s / static_cast<double>(n);
  };

  // initial positive sequence: sum paired autocovariances until one goes
  // nonpositive
  double tau = gamma0;  // accumulates gamma0 + 2 sum_{t>=1} gamma_t
  for (Eigen::Index t = 1; t + 1 < n; t += 2) {
    const double pair = gamma_at(t) + gamma_at(t + 1);
    if (pair <= 0.0) break;
    tau += 2.0 * pair;
  }
  const double essValue = static_cast<double>(n) * gamma0 / tau;
  return {std::min(essValue, static_cast<double>(n)), false};
}

IntervalMetrics interval_metrics(const Eigen::MatrixXi& draws, const Eigen::VectorXi& observed,
                                 double level) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("interval_metrics: bad level");
  if (draws.cols() != observed.size())
    throw std::invalid_argument("interval_metrics: column mismatch");
  const Eigen::Index count = draws.rows();
  const double alpha = 0.5 * (1.0 - level);
  if (static_cast<double>(count) * alpha < 1.0)
    throw std::invalid_argument("interval_metrics: too few draws for the level");

  IntervalMetrics out;
  std::vector<int> col(static_cast<std::size_t>(count));
  for (Eigen::Index j = 0; j < draws.cols(); ++j) {
    for (Eigen::Index i = 0; i < count; ++i) col[static_cast<std::size_t>(i)] = draws(i, j);
    std::sort(col.begin(), col.end());
    const auto loIdx = static_cast<std::size_t>(
        std::ceil(alpha * static_cast<double>(count)) - 1);
    const auto hiIdx = static_cast<std::size_t>(
        std::ceil((1.0 - alpha) * static_cast<double>(count)) - 1);
    const int lo = col[loIdx];
    const int hi = col[hiIdx];
    out.meanWidth += static_cast<double>(hi - lo);
    if (observed[j] >= lo && observed[j] <= hi) out.coverage += 1.0;
  }
  out.meanWidth /= static_cast<double>(draws.cols());
  out.coverage /= static_cast<double>(draws.cols());
  return out;
}

RocResult roc_auc(const Eigen::VectorXd& scores, const std::vector<int>& labels) {
  const std::size_t n = static_cast<std::size_t>(scores.size());
  if (labels.size() != n) throw std::invalid_argument("roc_auc: length mismatch");
  std::size_t npos = 0;
  for (int l : labels) npos += (l != 0) ? 1u : 0u;
  const std::size_t nneg = n - npos;
  if (npos == 0 || nneg == 0) throw std::invalid_argument("roc_auc: both classes required");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // midranks for the rank-sum AUC
  std::vector<double> rank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
    i = j + 1;
  }
  double rankSum = 0.0;
  for (std::size_t k = 0; k < n; ++k)
    if (labels[k] != 0) rankSum += rank[k];
  RocResult out;
  out.auc = (rankSum - 0.5 * static_cast<double>(npos) * static_cast<double>(npos + 1)) /
            (static_cast<double>(npos) * static_cast<double>(nneg));

  // curve swept from the highest threshold down
  out.curve.emplace_back(0.0, 0.0);
  std::size_t tp = 0, fp = 0;
  for (std::size_t k = n; k > 0;) {
    const double threshold = scores[order[k - 1]];
    while (k > 0 && scores[order[k - 1]] == threshold) {
      if (labels[order[k - 1]] != 0)
        ++tp;
      else
        ++fp;
      --k;
    }
    out.curve.emplace_back(static_cast<double>(fp) / static_cast<double>(nneg),
                           static_cast<double>(tp) / static_cast<double>(npos));
  }
  return out;
}

}  // namespace star::metrics
