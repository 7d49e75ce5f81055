#include "star/selection_normal.hpp"

#include <cmath>
#include <stdexcept>

namespace star::selnorm {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

void validate(const SelectionNormal& d) {
  const Eigen::Index n = d.n(), p = d.p();
  if (d.sigmaZ.rows() != n || d.sigmaZ.cols() != n)
    throw std::invalid_argument("SelectionNormal: sigmaZ shape mismatch");
  if (d.sigmaTheta.rows() != p || d.sigmaTheta.cols() != p)
    throw std::invalid_argument("SelectionNormal: sigmaTheta shape mismatch");
  if (d.sigmaZTheta.rows() != n || d.sigmaZTheta.cols() != p)
    throw std::invalid_argument("SelectionNormal: sigmaZTheta shape mismatch");
  if (d.region.dim() != n) throw std::invalid_argument("SelectionNormal: region length mismatch");
}

// log phi_p(theta; mu, Sigma) through the PSD Cholesky (jittered once).
double log_mvn_density(const Eigen::VectorXd& theta, const Eigen::VectorXd& mu,
                       const Eigen::MatrixXd& sigma) {
  const Eigen::MatrixXd l = gauss::chol_psd(sigma);
  const Eigen::VectorXd w = l.triangularView<Eigen::Lower>().solve(theta - mu);
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) logdet += std::log(l(i, i));
  return -static_cast<double>(theta.size()) * kLogSqrt2Pi - logdet - 0.5 * w.squaredNorm();
}

}  // namespace

SelectionNormal SelectionNormal::gaussian(Eigen::VectorXd mean, Eigen::MatrixXd cov) {
  SelectionNormal d;
  const Eigen::Index p = mean.size();
  d.muTheta = std::move(mean);
  d.sigmaTheta = std::move(cov);
  d.muZ.resize(0);
  d.sigmaZ.resize(0, 0);
  d.sigmaZTheta.resize(0, p);
  d.region = gauss::BoxRegion::whole(0);
  return d;
}

Estimate density(const SelectionNormal& d, const Eigen::VectorXd& theta, std::size_t nSamples,
                 Rng& rng) {
  validate(d);
  if (theta.size() != d.p()) throw std::invalid_argument("density: theta length mismatch");
  const double logPrior = log_mvn_density(theta, d.muTheta, d.sigmaTheta);
  // The constraint cancels exactly when the blocks are uncorrelated.
  if (d.n() == 0 || d.sigmaZTheta.isZero(0.0)) return {std::exp(logPrior), 0.0};

  const Eigen::MatrixXd lTheta = gauss::chol_psd(d.sigmaTheta);
  // sigmaZTheta * sigmaTheta^{-1} (theta - muTheta) and the conditional cov
  const Eigen::VectorXd w = lTheta.triangularView<Eigen::Lower>().solve(theta - d.muTheta);
  const Eigen::VectorXd w2 =
      lTheta.triangularView<Eigen::Lower>().transpose().solve(w);
  const Eigen::MatrixXd k = lTheta.triangularView<Eigen::Lower>().solve(d.sigmaZTheta.transpose());
  Eigen::MatrixXd condCov = d.sigmaZ - k.transpose() * k;
  condCov = 0.5 * (condCov + condCov.transpose());

  gauss::GaussianParams num{d.sigmaZTheta * w2 + d.muZ, condCov};
  gauss::GaussianParams den{d.muZ, d.sigmaZ};
  const auto pn = gauss::box_probability(num, d.region, nSamples, rng);
  const auto pd = gauss::box_probability(den, d.region, nSamples, rng);
  if (pd.underflow) throw std::runtime_error("density: marginal mass underflows");
  const double value = std::exp(logPrior + pn.logEstimate - pd.logEstimate);
  return {value, std::sqrt(pn.relErr * pn.relErr + pd.relErr * pd.relErr)};
}

Estimate mgf(const SelectionNormal& d, const Eigen::VectorXd& s, std::size_t nSamples, Rng& rng) {
  validate(d);
  if (s.size() != d.p()) throw std::invalid_argument("mgf: argument length mismatch");
  const double logGauss = s.dot(d.muTheta) + 0.5 * s.dot(d.sigmaTheta * s);
  if (d.n() == 0 || d.sigmaZTheta.isZero(0.0)) return {std::exp(logGauss), 0.0};
  gauss::GaussianParams num{d.sigmaZTheta * s + d.muZ, d.sigmaZ};
  gauss::GaussianParams den{d.muZ, d.sigmaZ};
  const auto pn = gauss::box_probability(num, d.region, nSamples, rng);
  const auto pd = gauss::box_probability(den, d.region, nSamples, rng);
  if (pd.underflow) throw std::runtime_error("mgf: marginal mass underflows");
  return {std::exp(logGauss + pn.logEstimate - pd.logEstimate),
          std::sqrt(pn.relErr * pn.relErr + pd.relErr * pd.relErr)};
}

Eigen::MatrixXd sample(const SelectionNormal& d, std::size_t count, Rng& rng) {
  validate(d);
  const Eigen::Index n = d.n(), p = d.p();

  Eigen::MatrixXd v1cov;
  Eigen::MatrixXd zinvZT;  // sigmaZ^{-1} sigmaZTheta, n x p
  if (n > 0) {
    const Eigen::MatrixXd lz = gauss::chol_psd(d.sigmaZ);
    const Eigen::MatrixXd k = lz.triangularView<Eigen::Lower>().solve(d.sigmaZTheta);
    zinvZT = lz.triangularView<Eigen::Lower>().transpose().solve(k);
    v1cov = d.sigmaTheta - k.transpose() * k;
  } else {
    v1cov = d.sigmaTheta;
  }
  const Eigen::MatrixXd l1 = gauss::chol_psd(v1cov);

  Eigen::MatrixXd draws(count, p);
  Eigen::MatrixXd v0;
  if (n > 0) {
    gauss::GaussianParams pz{Eigen::VectorXd::Zero(n), d.sigmaZ};
    v0 = gauss::sample_tmvn(pz, d.region.shifted(d.muZ), count, rng).draws;
  }
  Eigen::VectorXd eps(p);
  for (std::size_t i = 0; i < count; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) eps[j] = rnorm(rng);
    Eigen::VectorXd theta = d.muTheta + l1.triangularView<Eigen::Lower>() * eps;
    if (n > 0) theta += zinvZT.transpose() * v0.row(i).transpose();
    draws.row(i) = theta.transpose();
  }
  return draws;
}

Moments moments(const SelectionNormal& d, std::size_t nSamples, Rng& rng) {
  validate(d);
  const Eigen::Index n = d.n();
  if (n == 0) return {d.muTheta, d.sigmaTheta};

  gauss::GaussianParams pz{Eigen::VectorXd::Zero(n), d.sigmaZ};
  const Eigen::MatrixXd v0 = gauss::sample_tmvn(pz, d.region.shifted(d.muZ), nSamples, rng).draws;
  const Eigen::VectorXd m = v0.colwise().mean();
  const Eigen::MatrixXd centered = v0.rowwise() - m.transpose();
  const Eigen::MatrixXd vcov =
      centered.transpose() * centered / static_cast<double>(v0.rows() - 1);

  const Eigen::MatrixXd lz = gauss::chol_psd(d.sigmaZ);
  const Eigen::MatrixXd k = lz.triangularView<Eigen::Lower>().solve(d.sigmaZTheta);
  const Eigen::MatrixXd w = lz.triangularView<Eigen::Lower>().transpose().solve(k);  // Z^{-1} ZT

  Moments out;
  out.mean = d.muTheta + w.transpose() * m;
  out.cov = d.sigmaTheta - w.transpose() * (d.sigmaZ - vcov) * w;
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  return out;
}

SelectionNormal linear_combine(const SelectionNormal& d, const Eigen::MatrixXd& a,
                               const Eigen::VectorXd& noiseMean, const Eigen::MatrixXd& noiseCov) {
  validate(d);
  if (a.cols() != d.p()) throw std::invalid_argument("linear_combine: A column mismatch");
  const Eigen::Index q = a.rows();
  if (noiseMean.size() != q || noiseCov.rows() != q || noiseCov.cols() != q)
    throw std::invalid_argument("linear_combine: noise shape mismatch");
  SelectionNormal out;
  out.muZ = d.muZ;
  out.sigmaZ = d.sigmaZ;
  out.region = d.region;
  out.muTheta = a * d.muTheta + noiseMean;
  out.sigmaTheta = a * d.sigmaTheta * a.transpose() + noiseCov;
  out.sigmaZTheta = d.sigmaZTheta * a.transpose();
  return out;
}

SelectionNormal sequential_update(const SelectionNormal& prior, const Eigen::MatrixXd& x,
                                  double sigma, const gauss::BoxRegion& newBox) {
  validate(prior);
  const Eigen::Index p = prior.p();
  const Eigen::Index n0 = prior.n();
  const Eigen::Index n = x.rows();
  if (x.cols() != p) throw std::invalid_argument("sequential_update: X column mismatch");
  if (newBox.dim() != n) throw std::invalid_argument("sequential_update: box length mismatch");
  if (!(sigma > 0.0)) throw std::invalid_argument("sequential_update: sigma must be positive");

  SelectionNormal out;
  out.muTheta = prior.muTheta;
  out.sigmaTheta = prior.sigmaTheta;

  out.muZ.resize(n0 + n);
  out.muZ << prior.muZ, x * prior.muTheta;

  out.sigmaZ.resize(n0 + n, n0 + n);
  const Eigen::MatrixXd cross = prior.sigmaZTheta * x.transpose();  // n0 x n
  out.sigmaZ.topLeftCorner(n0, n0) = prior.sigmaZ;
  out.sigmaZ.topRightCorner(n0, n) = cross;
  out.sigmaZ.bottomLeftCorner(n, n0) = cross.transpose();
  out.sigmaZ.bottomRightCorner(n, n) =
      x * prior.sigmaTheta * x.transpose() + sigma * sigma * Eigen::MatrixXd::Identity(n, n);

  out.sigmaZTheta.resize(n0 + n, p);
  out.sigmaZTheta.topRows(n0) = prior.sigmaZTheta;
  out.sigmaZTheta.bottomRows(n) = x * prior.sigmaTheta;

  out.region = prior.region.concat(newBox);
  return out;
}

}  // namespace star::selnorm
