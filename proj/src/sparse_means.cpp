#include "star/sparse_means.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <stdexcept>

namespace star::sparse {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

// log likelihood of one observation under slab variance sigma^2 (1 + psi*g).
double obs_loglik(const SparseMeansConfig& config, long yi, double var) {
  const double sd = std::sqrt(var);
  if (config.gaussianLikelihood) {
    const double z = config.transform.eval(static_cast<double>(yi));
    return -0.5 * z * z / var - std::log(sd) - kLogSqrt2Pi;
  }
  const auto [a, b] = discrete::interval_for(config.scheme, yi);
  return gauss::ln_interval_prob(config.transform.eval(a) / sd, config.transform.eval(b) / sd);
}

double gamma_draw(double shape, Rng& rng) {
  return boost::math::gamma_p_inv(shape, runif(rng));
}

}  // namespace

PsiPrior PsiPrior::fixed_at(double psi) {
  if (!(psi > 0.0)) throw std::invalid_argument("PsiPrior: psi must be positive");
  return {true, psi};
}

PsiPrior PsiPrior::uniform_root() { return {false, 1.0}; }

double marginal_loglik(const SparseMeansConfig& config, const Eigen::VectorXi& y,
                       const Eigen::VectorXi& gamma, double psi) {
  if (y.size() != gamma.size()) throw std::invalid_argument("marginal_loglik: length mismatch");
  const double s2 = config.sigma * config.sigma;
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    total += obs_loglik(config, y[i], s2 * (1.0 + psi * (gamma[i] != 0 ? 1.0 : 0.0)));
  return total;
}

double inclusion_loglik_ratio(const SparseMeansConfig& config, long yi, double psi) {
  const double s2 = config.sigma * config.sigma;
  return obs_loglik(config, yi, s2 * (1.0 + psi)) - obs_loglik(config, yi, s2);
}

Eigen::VectorXd sample_theta(const SparseMeansConfig& config, const Eigen::VectorXi& y,
                             const Eigen::VectorXi& gamma, double psi, Rng& rng) {
  if (y.size() != gamma.size()) throw std::invalid_argument("sample_theta: length mismatch");
  const double shrink = psi / (1.0 + psi);
  const double v0sd = config.sigma * std::sqrt(1.0 + psi);
  const double v1sd = config.sigma * std::sqrt(shrink);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (gamma[i] == 0) continue;
    double v0;
    if (config.gaussianLikelihood) {
      v0 = config.transform.eval(static_cast<double>(y[i]));
    } else {
      const auto [a, b] = discrete::interval_for(config.scheme, y[i]);
      v0 = gauss::sample_truncnorm_scalar(0.0, v0sd, config.transform.eval(a),
                                          config.transform.eval(b), rng);
    }
    theta[i] = v1sd * rnorm(rng) + shrink * v0;
  }
  return theta;
}

SparseMeansState gibbs_sweep(const SparseMeansConfig& config, const Eigen::VectorXi& y,
                             SparseMeansState state, Rng& rng) {
  const Eigen::Index n = y.size();
  if (state.gamma.size() != n) throw std::invalid_argument("gibbs_sweep: state length mismatch");
  if (!(state.pi > 0.0 && state.pi < 1.0))
    throw std::invalid_argument("gibbs_sweep: pi outside (0,1)");

  // collapsed coordinate scan over gamma (theta marginalized analytically)
  const double logOddsPrior = std::log(state.pi) - std::log1p(-state.pi);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double logOmega = logOddsPrior + inclusion_loglik_ratio(config, y[i], state.psi);
    const double prob = 1.0 / (1.0 + std::exp(-logOmega));
    state.gamma[i] = (runif(rng) < prob) ? 1 : 0;
  }

  // exact refresh of theta under the new inclusion pattern
  state.theta = sample_theta(config, y, state.gamma, state.psi, rng);

  // conjugate Beta update of pi
  const auto k1 = static_cast<double>((state.gamma.array() != 0).count());
  const double k0 = static_cast<double>(n) - k1;
  const double ga = gamma_draw(config.aPi + k1, rng);
  const double gb = gamma_draw(config.bPi + k0, rng);
  state.pi = std::min(std::max(ga / (ga + gb), 1e-12), 1.0 - 1e-12);

  // psi^{-1} ~ Gamma{(k1-1)/2, sum theta^2 / (2 sigma^2)} truncated to
  // [1/n, inf); skipped when fixed or the shape is nonpositive.
  if (!config.psiPrior.fixed) {
    const double shape = 0.5 * (k1 - 1.0);
    double rate = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (state.gamma[i] != 0) rate += state.theta[i] * state.theta[i];
    rate /= 2.0 * config.sigma * config.sigma;
    if (shape > 0.0 && rate > 0.0) {
      const double lo = 1.0 / static_cast<double>(n);
      const double flo = boost::math::gamma_p(shape, rate * lo);
      const double u = std::min(flo + runif(rng) * (1.0 - flo), 1.0 - 1e-15);
      const double inv = boost::math::gamma_p_inv(shape, u) / rate;
      state.psi = 1.0 / std::max(inv, lo);
    }
  } else {
    state.psi = config.psiPrior.value;
  }
  return state;
}

ChainResult run_chain(const SparseMeansConfig& config, const Eigen::VectorXi& y,
                      std::size_t sweeps, std::size_t burnin, Rng& rng) {
  if (sweeps <= burnin) throw std::invalid_argument("run_chain: sweeps must exceed burnin");
  const Eigen::Index n = y.size();
  SparseMeansState state;
  state.gamma = Eigen::VectorXi::Zero(n);
  state.theta = Eigen::VectorXd::Zero(n);
  state.pi = config.aPi / (config.aPi + config.bPi);
  state.psi = config.psiPrior.fixed ? config.psiPrior.value : 1.0;

  ChainResult out;
  const std::size_t kept = sweeps - burnin;
  out.inclusionProbs = Eigen::VectorXd::Zero(n);
  out.thetaDraws.resize(kept, n);
  out.states.reserve(kept);
  for (std::size_t s = 0; s < sweeps; ++s) {
    state = gibbs_sweep(config, y, state, rng);
    if (s >= burnin) {
      out.inclusionProbs += state.gamma.cast<double>();
      out.thetaDraws.row(s - burnin) = state.theta.transpose();
      out.states.push_back(state);
    }
  }
  out.inclusionProbs /= static_cast<double>(kept);
  return out;
}

double estimate_sigma_2means(const Eigen::VectorXi& y, const discrete::RoundingScheme& scheme,
                             const discrete::Transformation& transform) {
  const Eigen::Index n = y.size();
  if (n < 4) throw std::invalid_argument("estimate_sigma_2means: need n >= 4");

  const gauss::BoxRegion box = discrete::interval_image(transform, scheme, y);
  std::vector<double> widths;
  for (Eigen::Index i = 0; i < n; ++i)
    if (std::isfinite(box.lower[i]) && std::isfinite(box.upper[i]))
      widths.push_back(box.upper[i] - box.lower[i]);
  double medWidth = 1.0;
  if (!widths.empty()) {
    std::nth_element(widths.begin(), widths.begin() + widths.size() / 2, widths.end());
    medWidth = widths[widths.size() / 2];
  }
  Eigen::VectorXd m(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lo = box.lower[i], hi = box.upper[i];
    if (std::isfinite(lo) && std::isfinite(hi))
      m[i] = 0.5 * (lo + hi);
    else if (std::isfinite(lo))
      m[i] = lo + medWidth;
    else
      m[i] = hi - medWidth;
  }
  if ((m.array() - m[0]).abs().maxCoeff() == 0.0)
    throw std::invalid_argument("estimate_sigma_2means: degenerate single-valued data");

  // Lloyd's two-means with deterministic extreme starts
  double c0 = m.minCoeff(), c1 = m.maxCoeff();
  Eigen::VectorXi assign = Eigen::VectorXi::Zero(n);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int a = (std::abs(m[i] - c0) <= std::abs(m[i] - c1)) ? 0 : 1;
      if (a != assign[i]) {
        assign[i] = a;
        changed = true;
      }
    }
    double s0 = 0.0, s1 = 0.0;
    int n0 = 0, n1 = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (assign[i] == 0) {
        s0 += m[i];
        ++n0;
      } else {
        s1 += m[i];
        ++n1;
      }
    }
    if (n0 > 0) c0 = s0 / n0;
    if (n1 > 0) c1 = s1 / n1;
    if (!changed && iter > 0) break;
  }
  double ss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double c = (assign[i] == 0) ? c0 : c1;
    ss += (m[i] - c) * (m[i] - c);
  }
  // floor at the within-interval rounding dispersion so degenerate clusters
  // still yield a usable scale
  const double roundingSd = medWidth / std::sqrt(12.0);
  return std::max({std::sqrt(ss / static_cast<double>(n - 2)), roundingSd, 1e-6});
}

}  // namespace star::sparse
