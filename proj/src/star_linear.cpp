#include "star/star_linear.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace star::linear {

void validate_model(const StarLinearModel& model) {
  if (model.y.size() != model.n())
    throw std::invalid_argument("StarLinearModel: y length does not match X rows");
  if (!(model.sigma > 0.0)) throw std::invalid_argument("StarLinearModel: sigma must be positive");
  for (Eigen::Index i = 0; i < model.y.size(); ++i)
    if (!model.scheme.in_support(model.y[i]))
      throw std::invalid_argument("StarLinearModel: response outside scheme support");
  if (model.is_gprior()) {
    if (!(std::get<GPrior>(model.prior).psi > 0.0))
      throw std::invalid_argument("StarLinearModel: psi must be positive");
  } else {
    const auto& g = std::get<GeneralPrior>(model.prior);
    if (g.muTheta.size() != model.p() || g.sigmaTheta.rows() != model.p())
      throw std::invalid_argument("StarLinearModel: prior shape mismatch");
  }
}

namespace {

// Cholesky of X'X; throws on rank deficiency (required by the g-prior).
Eigen::LLT<Eigen::MatrixXd> xtx_llt(const StarLinearModel& model) {
  const Eigen::MatrixXd xtx = model.X.transpose() * model.X;
  Eigen::LLT<Eigen::MatrixXd> llt(xtx);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("g-prior requires X'X invertible (rank-deficient design)");
  const Eigen::VectorXd diag = llt.matrixLLT().diagonal();
  if (diag.minCoeff() <= 1e-10 * std::max(1.0, diag.maxCoeff()))
    throw std::runtime_error("g-prior requires X'X invertible (rank-deficient design)");
  return llt;
}

// V0 covariance under the g-prior: sigma^2 (psi X(X'X)^{-1}X' + I).
Eigen::MatrixXd gprior_v0_cov(const StarLinearModel& model,
                              const Eigen::LLT<Eigen::MatrixXd>& llt) {
  const double psi = std::get<GPrior>(model.prior).psi;
  const Eigen::MatrixXd xk = llt.solve(model.X.transpose());  // (X'X)^{-1} X'
  Eigen::MatrixXd cov = psi * model.X * xk;
  cov.diagonal().array() += 1.0;
  cov *= model.sigma * model.sigma;
  return 0.5 * (cov + cov.transpose());
}

}  // namespace

Eigen::VectorXd StarLinearModel::prior_mean() const {
  if (is_gprior()) {
    const auto& g = std::get<GPrior>(prior);
    if (g.muTheta.size() == 0) return Eigen::VectorXd::Zero(p());
    return g.muTheta;
  }
  return std::get<GeneralPrior>(prior).muTheta;
}

Eigen::MatrixXd StarLinearModel::prior_cov() const {
  if (!is_gprior()) return std::get<GeneralPrior>(prior).sigmaTheta;
  const auto& g = std::get<GPrior>(prior);
  const Eigen::MatrixXd xtx = X.transpose() * X;
  Eigen::LLT<Eigen::MatrixXd> llt(xtx);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("g-prior requires X'X invertible (rank-deficient design)");
  Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(p(), p()));
  return g.psi * sigma * sigma * 0.5 * (inv + inv.transpose());
}

selnorm::SelectionNormal posterior(const StarLinearModel& model) {
  validate_model(model);
  const Eigen::Index n = model.n();
  selnorm::SelectionNormal d;
  d.muTheta = model.prior_mean();
  d.sigmaTheta = model.prior_cov();
  d.muZ = model.X * d.muTheta;
  d.sigmaZ = model.X * d.sigmaTheta * model.X.transpose() +
             model.sigma * model.sigma * Eigen::MatrixXd::Identity(n, n);
  d.sigmaZTheta = model.X * d.sigmaTheta;
  d.region = discrete::interval_image(model.transform, model.scheme, model.y);
  return d;
}

Eigen::MatrixXd sample_posterior_gprior(const StarLinearModel& model, std::size_t count,
                                        Rng& rng) {
  validate_model(model);
  if (!model.is_gprior()) throw std::invalid_argument("sample_posterior_gprior: g-prior required");
  const auto llt = xtx_llt(model);
  const double psi = std::get<GPrior>(model.prior).psi;
  const double shrink = psi / (1.0 + psi);
  const Eigen::Index n = model.n(), p = model.p();
  const Eigen::VectorXd mu = model.prior_mean();

  // V1 ~ N(0, sigma^2 psi/(1+psi) (X'X)^{-1}): whiten with the factor of X'X.
  const Eigen::MatrixXd lxtx = llt.matrixL();
  const double v1scale = model.sigma * std::sqrt(shrink);

  Eigen::MatrixXd v0;
  if (n > 0) {
    const gauss::BoxRegion box =
        discrete::interval_image(model.transform, model.scheme, model.y).shifted(model.X * mu);
    gauss::GaussianParams pz{Eigen::VectorXd::Zero(n), gprior_v0_cov(model, llt)};
    v0 = gauss::sample_tmvn(pz, box, count, rng).draws;
  }

  Eigen::MatrixXd draws(count, p);
  Eigen::VectorXd eps(p);
  for (std::size_t i = 0; i < count; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) eps[j] = rnorm(rng);
    // (L')^{-1} eps ~ N(0, (X'X)^{-1})
    Eigen::VectorXd v1 =
        v1scale * lxtx.triangularView<Eigen::Lower>().transpose().solve(eps);
    Eigen::VectorXd theta = mu + v1;
    if (n > 0)
      theta += shrink * llt.solve(model.X.transpose() * v0.row(i).transpose());
    draws.row(i) = theta.transpose();
  }
  return draws;
}

Eigen::VectorXd posterior_mean_gprior(const StarLinearModel& model, std::size_t nSamples,
                                      Rng& rng) {
  validate_model(model);
  if (!model.is_gprior()) throw std::invalid_argument("posterior_mean_gprior: g-prior required");
  const auto llt = xtx_llt(model);
  const double psi = std::get<GPrior>(model.prior).psi;
  const Eigen::VectorXd mu = model.prior_mean();
  if (model.n() == 0) return mu;

  const gauss::BoxRegion box =
      discrete::interval_image(model.transform, model.scheme, model.y).shifted(model.X * mu);
  gauss::GaussianParams pz{Eigen::VectorXd::Zero(model.n()), gprior_v0_cov(model, llt)};
  const Eigen::MatrixXd v0 = gauss::sample_tmvn(pz, box, nSamples, rng).draws;
  const Eigen::VectorXd zhat = v0.colwise().mean();
  return mu + psi / (1.0 + psi) * llt.solve(model.X.transpose() * zhat);
}

Eigen::MatrixXi predict_via_posterior(const StarLinearModel& model, const PredictiveRequest& req,
                                      Rng& rng) {
  validate_model(model);
  if (req.xtilde.cols() != model.p())
    throw std::invalid_argument("predict_via_posterior: xtilde column mismatch");
  const Eigen::Index nt = req.xtilde.rows();
  Eigen::MatrixXd thetas = model.is_gprior()
                               ? sample_posterior_gprior(model, req.count, rng)
                               : selnorm::sample(posterior(model), req.count, rng);
  Eigen::MatrixXi out(req.count, nt);
  for (std::size_t i = 0; i < req.count; ++i) {
    const Eigen::VectorXd mean = req.xtilde * thetas.row(i).transpose();
    for (Eigen::Index j = 0; j < nt; ++j) {
      const double z = mean[j] + model.sigma * rnorm(rng);
      out(i, j) = static_cast<int>(
          discrete::round_latent(model.scheme, model.transform.inverse(z)));
    }
  }
  return out;
}

selnorm::SelectionNormal latent_predictive(const StarLinearModel& model,
                                           const PredictiveRequest& req) {
  validate_model(model);
  if (req.xtilde.cols() != model.p())
    throw std::invalid_argument("latent_predictive: xtilde column mismatch");
  const Eigen::Index n = model.n(), nt = req.xtilde.rows();
  const Eigen::VectorXd mu = model.prior_mean();
  const Eigen::MatrixXd st = model.prior_cov();
  selnorm::SelectionNormal d;
  d.muZ = model.X * mu;
  d.muTheta = req.xtilde * mu;
  d.sigmaZ = model.X * st * model.X.transpose() +
             model.sigma * model.sigma * Eigen::MatrixXd::Identity(n, n);
  d.sigmaTheta = req.xtilde * st * req.xtilde.transpose() +
                 model.sigma * model.sigma * Eigen::MatrixXd::Identity(nt, nt);
  d.sigmaZTheta = model.X * st * req.xtilde.transpose();
  d.region = discrete::interval_image(model.transform, model.scheme, model.y);
  return d;
}

Eigen::MatrixXi predict_gprior(const StarLinearModel& model, const PredictiveRequest& req,
                               Rng& rng) {
  validate_model(model);
  if (!model.is_gprior()) throw std::invalid_argument("predict_gprior: g-prior required");
  if (req.xtilde.cols() != model.p())
    throw std::invalid_argument("predict_gprior: xtilde column mismatch");
  const auto llt = xtx_llt(model);
  const double psi = std::get<GPrior>(model.prior).psi;
  const double shrink = psi / (1.0 + psi);
  const Eigen::Index n = model.n(), nt = req.xtilde.rows();
  const Eigen::VectorXd mu = model.prior_mean();

  Eigen::MatrixXd v0;
  if (n > 0) {
    const gauss::BoxRegion box =
        discrete::interval_image(model.transform, model.scheme, model.y).shifted(model.X * mu);
    gauss::GaussianParams pz{Eigen::VectorXd::Zero(n), gprior_v0_cov(model, llt)};
    v0 = gauss::sample_tmvn(pz, box, req.count, rng).draws;
  }

  // V1~ covariance: sigma^2 { psi/(1+psi) X~ (X'X)^{-1} X~' + I }
  Eigen::MatrixXd v1cov =
      shrink * req.xtilde * llt.solve(req.xtilde.transpose());
  v1cov.diagonal().array() += 1.0;
  v1cov *= model.sigma * model.sigma;
  const Eigen::MatrixXd l1 = gauss::chol_psd(v1cov);

  const Eigen::VectorXd base = req.xtilde * mu;
  Eigen::MatrixXi out(req.count, nt);
  Eigen::VectorXd eps(nt);
  for (std::size_t i = 0; i < req.count; ++i) {
    for (Eigen::Index j = 0; j < nt; ++j) eps[j] = rnorm(rng);
    Eigen::VectorXd z = base + l1.triangularView<Eigen::Lower>() * eps;
    if (n > 0)
      z += shrink * req.xtilde *
           llt.solve(model.X.transpose() * v0.row(i).transpose());
    for (Eigen::Index j = 0; j < nt; ++j)
      out(i, j) = static_cast<int>(
          discrete::round_latent(model.scheme, model.transform.inverse(z[j])));
  }
  return out;
}

PmfResult predictive_pmf(const StarLinearModel& model, const Eigen::VectorXd& xtilde,
                         const std::vector<long>& support, std::size_t nSamples, Rng& rng) {
  validate_model(model);
  if (xtilde.size() != model.p()) throw std::invalid_argument("predictive_pmf: xtilde mismatch");
  if (support.empty()) throw std::invalid_argument("predictive_pmf: empty support");
  const Eigen::Index n = model.n();
  const Eigen::VectorXd mu = model.prior_mean();
  const Eigen::MatrixXd st = model.prior_cov();

  // joint latent covariance of (z~, z)
  Eigen::MatrixXd joint(n + 1, n + 1);
  const Eigen::VectorXd sx = st * xtilde;
  joint(0, 0) = xtilde.dot(sx) + model.sigma * model.sigma;
  if (n > 0) {
    const Eigen::MatrixXd cross = model.X * sx;  // n x 1
    joint.block(1, 0, n, 1) = cross;
    joint.block(0, 1, 1, n) = cross.transpose();
    joint.bottomRightCorner(n, n) = model.X * st * model.X.transpose() +
                                    model.sigma * model.sigma * Eigen::MatrixXd::Identity(n, n);
  }
  Eigen::VectorXd jointMean(n + 1);
  jointMean[0] = xtilde.dot(mu);
  if (n > 0) jointMean.tail(n) = model.X * mu;
  const gauss::BoxRegion dataBox =
      discrete::interval_image(model.transform, model.scheme, model.y);

  gauss::BoxProbability den;
  if (n > 0) {
    gauss::GaussianParams pd{jointMean.tail(n),
                             joint.bottomRightCorner(n, n)};
    den = gauss::box_probability(pd, dataBox, nSamples, rng);
    if (den.underflow) throw std::runtime_error("predictive_pmf: marginal mass underflows");
  } else {
    den.estimate = 1.0;
    den.logEstimate = 0.0;
  }

  PmfResult out;
  out.support = support;
  out.probs.resize(static_cast<Eigen::Index>(support.size()));
  double worst = 0.0;
  for (std::size_t k = 0; k < support.size(); ++k) {
    const auto [a, b] = discrete::interval_for(model.scheme, support[k]);
    gauss::BoxRegion box;
    box.lower.resize(n + 1);
    box.upper.resize(n + 1);
    box.lower[0] = model.transform.eval(a);
    box.upper[0] = model.transform.eval(b);
    if (n > 0) {
      box.lower.tail(n) = dataBox.lower;
      box.upper.tail(n) = dataBox.upper;
    }
    gauss::GaussianParams pj{jointMean, joint};
    const auto num = gauss::box_probability(pj, box, nSamples, rng);
    out.probs[static_cast<Eigen::Index>(k)] =
        num.underflow ? 0.0 : std::exp(num.logEstimate - den.logEstimate);
    worst = std::max(worst, std::sqrt(num.relErr * num.relErr + den.relErr * den.relErr));
  }
  out.rawSum = out.probs.sum();
  out.relErr = worst;
  if (out.rawSum > 0.0) out.probs /= out.rawSum;
  return out;
}

double point_predict(const StarLinearModel& model, const Eigen::VectorXd& xtilde,
                     const std::vector<long>& support, std::size_t nSamples, Rng& rng) {
  const PmfResult pmf = predictive_pmf(model, xtilde, support, nSamples, rng);
  double e = 0.0;
  for (std::size_t k = 0; k < pmf.support.size(); ++k)
    e += static_cast<double>(pmf.support[k]) * pmf.probs[static_cast<Eigen::Index>(k)];
  return e;
}

LogMarginal marginal_likelihood(const StarLinearModel& model, std::size_t nSamples, Rng& rng) {
  validate_model(model);
  const auto d = posterior(model);
  if (model.n() == 0) return {0.0, 0.0, false};
  gauss::GaussianParams pz{d.muZ, d.sigmaZ};
  const auto pr = gauss::box_probability(pz, d.region, nSamples, rng);
  return {pr.logEstimate, pr.relErr, pr.underflow};
}

double estimate_sigma(const Eigen::MatrixXd& x, const Eigen::VectorXi& y,
                      const discrete::RoundingScheme& scheme,
                      const discrete::Transformation& transform) {
  const Eigen::Index n = x.rows(), p = x.cols();
  if (y.size() != n) throw std::invalid_argument("estimate_sigma: length mismatch");
  if (n <= p) throw std::invalid_argument("estimate_sigma: need n > p");

  const gauss::BoxRegion box = discrete::interval_image(transform, scheme, y);
  std::vector<double> widths;
  for (Eigen::Index i = 0; i < n; ++i)
    if (std::isfinite(box.lower[i]) && std::isfinite(box.upper[i]))
      widths.push_back(box.upper[i] - box.lower[i]);
  double medWidth = 1.0;  // fallback when every interval is unbounded
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
    else if (std::isfinite(hi))
      m[i] = hi - medWidth;
    else
      m[i] = 0.0;
  }
  const Eigen::VectorXd beta = x.colPivHouseholderQr().solve(m);
  const double ssr = (m - x * beta).squaredNorm();
  return std::max(std::sqrt(ssr / static_cast<double>(n - p)), 1e-8);
}

Eigen::MatrixXd gibbs_da_baseline(const StarLinearModel& model, std::size_t count,
                                  std::size_t burnin, Rng& rng) {
  validate_model(model);
  const Eigen::Index n = model.n(), p = model.p();
  const Eigen::VectorXd mu = model.prior_mean();
  const Eigen::MatrixXd priorCov = model.prior_cov();
  const Eigen::MatrixXd priorL = gauss::chol_psd(priorCov);
  // prior precision and precision-weighted mean via triangular solves
  const Eigen::MatrixXd priorPrec = priorL.triangularView<Eigen::Lower>().transpose().solve(
      Eigen::MatrixXd(priorL.triangularView<Eigen::Lower>().solve(
          Eigen::MatrixXd::Identity(p, p))));
  const double s2inv = 1.0 / (model.sigma * model.sigma);
  Eigen::MatrixXd q = priorPrec + s2inv * model.X.transpose() * model.X;
  const Eigen::MatrixXd lq = gauss::chol_psd(q);
  const Eigen::VectorXd priorTerm = priorPrec * mu;
  const gauss::BoxRegion box = discrete::interval_image(model.transform, model.scheme, model.y);

  // deterministic start: pseudo-data least squares
  Eigen::VectorXd pseudo(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lo = std::isfinite(box.lower[i]) ? box.lower[i] : box.upper[i] - 1.0;
    const double hi = std::isfinite(box.upper[i]) ? box.upper[i] : box.lower[i] + 1.0;
    pseudo[i] = 0.5 * (lo + hi);
  }
  Eigen::VectorXd theta = (n > p) ? Eigen::VectorXd(model.X.colPivHouseholderQr().solve(pseudo))
                                  : mu;

  Eigen::VectorXd z(n);
  Eigen::MatrixXd draws(count, p);
  Eigen::VectorXd eps(p);
  const std::size_t total = count + burnin;
  for (std::size_t sweep = 0; sweep < total; ++sweep) {
    const Eigen::VectorXd fitted = model.X * theta;
    for (Eigen::Index i = 0; i < n; ++i)
      z[i] = gauss::sample_truncnorm_scalar(fitted[i], model.sigma, box.lower[i], box.upper[i],
                                            rng);
    const Eigen::VectorXd rhs = priorTerm + s2inv * model.X.transpose() * z;
    const Eigen::VectorXd mean = lq.triangularView<Eigen::Lower>().transpose().solve(
        Eigen::VectorXd(lq.triangularView<Eigen::Lower>().solve(rhs)));
    for (Eigen::Index j = 0; j < p; ++j) eps[j] = rnorm(rng);
    theta = mean + lq.triangularView<Eigen::Lower>().transpose().solve(eps);
    if (sweep >= burnin) draws.row(sweep - burnin) = theta.transpose();
  }
  return draws;
}

std::vector<long> default_support(const StarLinearModel& model) {
  double sy = 1.0;
  if (model.y.size() > 1) {
    const double ybar = model.y.cast<double>().mean();
    sy = std::sqrt((model.y.cast<double>().array() - ybar).square().sum() /
                   static_cast<double>(model.y.size() - 1));
  }
  const long ext = static_cast<long>(std::ceil(10.0 * std::max(sy, 1.0)));
  const long lo = std::isfinite(model.scheme.yMin) ? static_cast<long>(model.scheme.yMin)
                                                   : model.y.minCoeff() - ext;
  const long hi = std::isfinite(model.scheme.yMax) ? static_cast<long>(model.scheme.yMax)
                                                   : model.y.maxCoeff() + ext;
  std::vector<long> support;
  for (long j = lo; j <= hi; ++j) support.push_back(j);
  return support;
}

}  // namespace star::linear
