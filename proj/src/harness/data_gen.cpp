#include "star/harness/data_gen.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <stdexcept>

#include "star/normal.hpp"

namespace star::harness {

namespace {

// Orthonormal polynomial curve basis on the grid (empirical inner product),
// degrees 1..maxDegree, built by Gram-Schmidt on the power basis.
Eigen::MatrixXd curve_basis(const Eigen::VectorXd& tau, int maxDegree) {
  const Eigen::Index n = tau.size();
  Eigen::MatrixXd v(n, maxDegree + 1);
  const double c = 0.5 * (tau.minCoeff() + tau.maxCoeff());
  const double s = std::max(0.5 * (tau.maxCoeff() - tau.minCoeff()), 1e-12);
  for (Eigen::Index i = 0; i < n; ++i) {
    double u = (tau[i] - c) / s, w = 1.0;
    for (int j = 0; j <= maxDegree; ++j) {
      v(i, j) = w;
      w *= u;
    }
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(v);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, maxDegree + 1);
  // normalize to the empirical measure: mean square one per column
  q *= std::sqrt(static_cast<double>(n));
  // fix signs so the leading coefficient is positive
  for (int j = 0; j <= maxDegree; ++j)
    if (q(n - 1, j) < 0.0) q.col(j) *= -1.0;
  return q.rightCols(maxDegree);  // drop the constant column
}

Eigen::VectorXd random_curve(const Eigen::VectorXd& tau, Rng& rng) {
  const Eigen::MatrixXd basis = curve_basis(tau, 4);
  Eigen::VectorXd beta(4);
  for (int j = 0; j < 4; ++j) beta[j] = std::sqrt(4.0 - j) * rnorm(rng);  // variances 4,3,2,1
  return basis * beta;
}

double mixture_cdf_value(long j) {
  if (j < 0) return 0.0;
  const double pois = boost::math::gamma_q(static_cast<double>(j) + 1.0, 10.0);
  double heaps = 0.0;
  for (int h = 5; h <= 25; h += 5) heaps += (j >= h) ? 0.2 : 0.0;
  const double bounds = (j >= 30 ? 0.5 : 0.0) + (j >= 0 ? 0.5 : 0.0);
  return 0.5 * pois + 0.25 * heaps + 0.25 * bounds;
}

}  // namespace

int rpois(double lambda, Rng& rng) {
  if (lambda < 0.0) throw std::invalid_argument("rpois: negative rate");
  // exact: count unit-exponential arrivals up to lambda
  double acc = 0.0;
  int k = -1;
  while (acc <= lambda) {
    acc += -std::log(runif(rng));
    ++k;
  }
  return k;
}

int rnegbin(double mean, double dispersion, Rng& rng) {
  // gamma-Poisson mixture; gamma via inverse CDF for determinism
  const double g = boost::math::gamma_p_inv(dispersion, runif(rng)) * (mean / dispersion);
  return rpois(g, rng);
}

SyntheticDataset gen_negbin_regression(int n, int p, std::uint64_t seed) {
  if (n <= p) throw std::invalid_argument("gen_negbin_regression: need n > p");
  Rng rng(seed);
  SyntheticDataset d;
  d.X.resize(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) d.X(i, j) = rnorm(rng);
  d.thetaTrue = Eigen::VectorXd::Zero(p);
  const int active = (p + 1) / 2;
  for (int j = 0; j < active; ++j) d.thetaTrue[j] = 1.0 / std::sqrt(static_cast<double>(p));
  d.y.resize(n);
  const double intercept = std::log(10.0);
  for (int i = 0; i < n; ++i) {
    const double mean = std::exp(intercept + d.X.row(i).dot(d.thetaTrue));
    d.y[i] = rnegbin(mean, 5.0, rng);
  }
  return d;
}

SyntheticDataset gen_nl_negbin(int n, std::uint64_t seed) {
  if (n < 20) throw std::invalid_argument("gen_nl_negbin: need n >= 20");
  Rng rng(seed);
  SyntheticDataset d;
  d.X = Eigen::VectorXd::LinSpaced(n, 0.0, 1.0);
  d.fTrue = random_curve(d.X.col(0), rng);
  d.y.resize(n);
  for (int i = 0; i < n; ++i) {
    const double mean = std::exp(d.fTrue[i]);
    d.y[i] = std::min(rnegbin(mean, 10.0, rng), 30);
  }
  return d;
}

discrete::Transformation mixture_cdf_transform() {
  std::vector<long> values;
  for (long j = 0; j <= 30; ++j) values.push_back(j);
  double mean = 0.0, m2 = 0.0;
  for (long j = 0; j <= 30; ++j) {
    const double pj = mixture_cdf_value(j) - mixture_cdf_value(j - 1);
    mean += static_cast<double>(j) * pj;
    m2 += static_cast<double>(j) * static_cast<double>(j) * pj;
  }
  const double sd = std::sqrt(std::max(m2 - mean * mean, 1e-12));
  return discrete::fit_from_cdf(values, mixture_cdf_value, mean, sd,
                                discrete::RoundingScheme::count_bounded(30.0),
                                discrete::Transformation::Kind::NpCdf);
}

SyntheticDataset gen_nl_mixture_cdf(int n, std::uint64_t seed) {
  if (n < 20) throw std::invalid_argument("gen_nl_mixture_cdf: need n >= 20");
  Rng rng(seed);
  SyntheticDataset d;
  d.X = Eigen::VectorXd::LinSpaced(n, 0.0, 1.0);
  const discrete::Transformation g = mixture_cdf_transform();
  const auto scheme = discrete::RoundingScheme::count_bounded(30.0);

  // latent-scale moments implied by the transformation (mixture mean/sd)
  double mean = 0.0, m2 = 0.0;
  for (long j = 0; j <= 30; ++j) {
    const double pj = mixture_cdf_value(j) - mixture_cdf_value(j - 1);
    mean += static_cast<double>(j) * pj;
    m2 += static_cast<double>(j) * static_cast<double>(j) * pj;
  }
  const double sdMix = std::sqrt(std::max(m2 - mean * mean, 1e-12));
  const double sigma = 0.7;

  // the latent mean curve spans the transformed scale
  Eigen::VectorXd f = random_curve(d.X.col(0), rng);
  const double fm = f.mean();
  const double fs = std::sqrt((f.array() - fm).square().sum() / f.size());
  const double targetSd =
      std::sqrt(std::max(sdMix * sdMix - sigma * sigma, 0.25 * sdMix * sdMix));
  d.fTrue = ((f.array() - fm) / std::max(fs, 1e-12) * targetSd + mean).matrix();

  d.y.resize(n);
  for (int i = 0; i < n; ++i) {
    const double z = d.fTrue[i] + sigma * rnorm(rng);
    d.y[i] = static_cast<int>(discrete::round_h(scheme, g.inverse(z)));
  }
  return d;
}

SyntheticDataset gen_rounded_sparse(int n, double mu, double propSignal, std::uint64_t seed) {
  if (!(propSignal > 0.0 && propSignal < 1.0))
    throw std::invalid_argument("gen_rounded_sparse: propSignal must lie in (0,1)");
  Rng rng(seed);
  SyntheticDataset d;
  d.gammaTrue = Eigen::VectorXi::Zero(n);
  const int k = static_cast<int>(std::lround(propSignal * n));
  // uniformly chosen signal indices via partial Fisher-Yates
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < k; ++i) {
    const int j = i + static_cast<int>(std::floor(runif(rng) * (n - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    d.gammaTrue[idx[static_cast<std::size_t>(i)]] = 1;
  }
  d.thetaTrue.resize(n);
  d.y.resize(n);
  d.X.resize(n, 0);
  for (int i = 0; i < n; ++i) {
    d.thetaTrue[i] = mu * d.gammaTrue[i];
    const double z = d.thetaTrue[i] + rnorm(rng);
    d.y[i] = static_cast<int>(std::floor(z));
  }
  return d;
}

}  // namespace star::harness
