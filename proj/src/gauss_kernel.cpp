#include "star/gauss_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace star::gauss {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogSqrt2Pi = 0.91893853320467274178;
constexpr double kAcceptFloor = 1e-3;
constexpr int kGibbsBurnin = 500;

void validate(const GaussianParams& params, const BoxRegion& box) {
  const Eigen::Index n = params.dim();
  if (params.cov.rows() != n || params.cov.cols() != n)
    throw std::invalid_argument("gauss: covariance shape does not match mean");
  if (box.lower.size() != n || box.upper.size() != n)
    throw std::invalid_argument("gauss: box dimension does not match mean");
  const double scale = std::max(1.0, params.cov.cwiseAbs().maxCoeff());
  if ((params.cov - params.cov.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw std::invalid_argument("gauss: covariance is not symmetric");
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(box.lower[i] < box.upper[i]))
      throw std::invalid_argument("gauss: box has lower >= upper");
}

struct Factored {
  Eigen::MatrixXd L;        // permuted unscaled factor
  Eigen::VectorXd lo, hi;   // permuted, mean-shifted bounds
  std::vector<int> perm;    // perm[j] = original index at position j
  Eigen::MatrixXd Ls;       // strictly-lower row-scaled factor
  Eigen::VectorXd los, his; // bounds scaled by diag(L)
};

// Greedy least-remaining-probability-mass ordering with incremental Cholesky.
// One diagonal jitter retry is applied before giving up on non-PSD input.
Factored cholperm_impl(Eigen::MatrixXd sigma, Eigen::VectorXd lo, Eigen::VectorXd hi,
                       bool allowJitterRetry) {
  const Eigen::Index n = sigma.rows();
  const double diagScale = std::max(sigma.trace() / static_cast<double>(n), 1e-12);

  Factored out;
  out.perm.resize(static_cast<std::size_t>(n));
  std::iota(out.perm.begin(), out.perm.end(), 0);
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(n);

  for (Eigen::Index j = 0; j < n; ++j) {
    // pick the remaining variable with the smallest conditional interval mass
    Eigen::Index best = j;
    double bestPr = kInf;
    for (Eigen::Index i = j; i < n; ++i) {
      double s = sigma(i, i) - L.row(i).head(j).squaredNorm();
      if (s < -1e-8 * diagScale) {
        if (!allowJitterRetry)
          throw std::runtime_error("cholesky_reordered: covariance not PSD within jitter budget");
        sigma.diagonal().array() += 1e-8 * diagScale;
        return cholperm_impl(sigma, lo, hi, false);
      }
      s = std::sqrt(std::max(s, std::numeric_limits<double>::epsilon() * diagScale));
      const double offset = L.row(i).head(j).dot(z.head(j));
      const double pr = ln_interval_prob((lo[i] - offset) / s, (hi[i] - offset) / s);
      if (pr < bestPr) {
        bestPr = pr;
        best = i;
      }
    }
    if (best != j) {
      sigma.row(j).swap(sigma.row(best));
      sigma.col(j).swap(sigma.col(best));
      L.row(j).swap(L.row(best));
      std::swap(lo[j], lo[best]);
      std::swap(hi[j], hi[best]);
      std::swap(out.perm[static_cast<std::size_t>(j)], out.perm[static_cast<std::size_t>(best)]);
    }
    double s = sigma(j, j) - L.row(j).head(j).squaredNorm();
    if (s < -1e-8 * diagScale) {
      if (!allowJitterRetry)
        throw std::runtime_error("cholesky_reordered: covariance not PSD within jitter budget");
      sigma.diagonal().array() += 1e-8 * diagScale;
      return cholperm_impl(sigma, lo, hi, false);
    }
    L(j, j) = std::sqrt(std::max(s, std::numeric_limits<double>::epsilon() * diagScale));
    for (Eigen::Index i = j + 1; i < n; ++i)
      L(i, j) = (sigma(i, j) - L.row(i).head(j).dot(L.row(j).head(j))) / L(j, j);
    const double offset = L.row(j).head(j).dot(z.head(j));
    z[j] = truncnorm_mean((lo[j] - offset) / L(j, j), (hi[j] - offset) / L(j, j));
  }

  out.L = std::move(L);
  out.lo = std::move(lo);
  out.hi = std::move(hi);
  out.Ls = out.L;
  out.los = out.lo;
  out.his = out.hi;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double d = out.L(k, k);
    out.Ls.row(k) /= d;
    out.Ls(k, k) = 0.0;
    out.los[k] = out.lo[k] / d;
    out.his[k] = out.hi[k] / d;
  }
  return out;
}

Factored cholperm(const GaussianParams& params, const BoxRegion& box) {
  Eigen::MatrixXd sigma = 0.5 * (params.cov + params.cov.transpose());
  return cholperm_impl(std::move(sigma), box.lower - params.mean, box.upper - params.mean, true);
}

// Gradient (and optional Jacobian) of the saddle-point system in the
// unknowns y = (x_{1..n-1}, mu_{1..n-1}).
void grad_psi(const Eigen::VectorXd& y, const Factored& f, Eigen::VectorXd& grad,
              Eigen::MatrixXd* jac) {
  const Eigen::Index n = f.los.size();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n), mu = Eigen::VectorXd::Zero(n);
  x.head(n - 1) = y.head(n - 1);
  mu.head(n - 1) = y.tail(n - 1);
  const Eigen::VectorXd c = f.Ls * x;
  Eigen::VectorXd pl(n), pu(n), P(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double lt = f.los[k] - mu[k] - c[k];
    const double ut = f.his[k] - mu[k] - c[k];
    const double w = ln_interval_prob(lt, ut);
    pl[k] = std::isinf(lt) ? 0.0 : std::exp(-0.5 * lt * lt - kLogSqrt2Pi - w);
    pu[k] = std::isinf(ut) ? 0.0 : std::exp(-0.5 * ut * ut - kLogSqrt2Pi - w);
    P[k] = pl[k] - pu[k];
  }
  grad.resize(2 * (n - 1));
  grad.head(n - 1) = (f.Ls.transpose() * P - mu).head(n - 1);
  grad.tail(n - 1) = (mu - x + P).head(n - 1);
  if (jac == nullptr) return;

  Eigen::VectorXd dP(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double lt = f.los[k] - mu[k] - c[k];
    const double ut = f.his[k] - mu[k] - c[k];
    const double tl = std::isinf(lt) ? 0.0 : lt * pl[k];
    const double tu = std::isinf(ut) ? 0.0 : ut * pu[k];
    dP[k] = -P[k] * P[k] + tl - tu;
  }
  const Eigen::MatrixXd DL = dP.asDiagonal() * f.Ls;
  const Eigen::MatrixXd mx = DL - Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd xx = f.Ls.transpose() * DL;
  jac->resize(2 * (n - 1), 2 * (n - 1));
  jac->topLeftCorner(n - 1, n - 1) = xx.topLeftCorner(n - 1, n - 1);
  jac->topRightCorner(n - 1, n - 1) = mx.topLeftCorner(n - 1, n - 1).transpose();
  jac->bottomLeftCorner(n - 1, n - 1) = mx.topLeftCorner(n - 1, n - 1);
  jac->bottomRightCorner(n - 1, n - 1) =
      Eigen::MatrixXd((1.0 + dP.head(n - 1).array()).matrix().asDiagonal());
}

// psi(x, mu): log importance weight of the tilted sequential proposal.
double psi_value(const Eigen::VectorXd& x, const Eigen::VectorXd& mu, const Factored& f) {
  const Eigen::Index n = f.los.size();
  const Eigen::VectorXd c = f.Ls * x;
  double total = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    total += ln_interval_prob(f.los[k] - mu[k] - c[k], f.his[k] - mu[k] - c[k]);
    total += 0.5 * mu[k] * mu[k] - mu[k] * x[k];
  }
  return total;
}

// Sequential proposal draw in scaled coordinates; returns the log weight and
// fills eta.
double propose(const Eigen::VectorXd& mu, const Factored& f, Rng& rng, Eigen::VectorXd& eta) {
  const Eigen::Index n = f.los.size();
  double logw = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double offset = f.Ls.row(k).head(k).dot(eta.head(k));
    const double lt = f.los[k] - mu[k] - offset;
    const double ut = f.his[k] - mu[k] - offset;
    const double w = ln_interval_prob(lt, ut);
    if (w == -kInf) {
      eta[k] = mu[k] + std::min(std::max(0.0, lt), ut);
      logw = -kInf;
      continue;
    }
    eta[k] = mu[k] + sample_truncnorm_std(lt, ut, rng);
    logw += w + 0.5 * mu[k] * mu[k] - mu[k] * eta[k];
  }
  return logw;
}

TiltingSolution solve_from_factored(Factored f) {
  const Eigen::Index n = f.los.size();
  TiltingSolution sol;
  sol.permutation = f.perm;
  sol.L = f.L;
  sol.lo = f.lo;
  sol.hi = f.hi;

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n), mu = Eigen::VectorXd::Zero(n);
  if (n > 1) {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(2 * (n - 1));
    Eigen::VectorXd grad;
    Eigen::MatrixXd jac;
    grad_psi(y, f, grad, &jac);
    double gnorm = grad.norm();
    bool ok = gnorm < 1e-8;
    for (int iter = 0; iter < 100 && !ok; ++iter) {
      Eigen::VectorXd step = jac.partialPivLu().solve(-grad);
      if (!step.allFinite()) break;
      double alpha = 1.0;
      bool improved = false;
      for (int h = 0; h < 30; ++h) {
        Eigen::VectorXd trial = y + alpha * step;
        Eigen::VectorXd gtrial;
        grad_psi(trial, f, gtrial, nullptr);
        if (gtrial.allFinite() && gtrial.norm() < gnorm) {
          y = trial;
          gnorm = gtrial.norm();
          improved = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!improved) break;
      grad_psi(y, f, grad, &jac);
      gnorm = grad.norm();
      ok = gnorm < 1e-8;
    }
    sol.converged = ok || gnorm < 1e-6;
    x.head(n - 1) = y.head(n - 1);
    mu.head(n - 1) = y.tail(n - 1);
  }
  // Last coordinate of the dominating point: conditional truncated mean.
  {
    const Eigen::VectorXd c = f.Ls * x;
    x[n - 1] = truncnorm_mean(f.los[n - 1] - c[n - 1], f.his[n - 1] - c[n - 1]);
  }
  sol.tilt = x;
  sol.shift = mu;
  sol.logNormConst = psi_value(x, mu, f);
  if (!std::isfinite(sol.logNormConst)) {
    sol.logNormConst = -kInf;
    sol.expectedAcceptRate = 0.0;
    return sol;
  }

  // Deterministic pilot estimate of the acceptance rate.
  Rng pilot(0x9d2c5680u);
  const int pilotDraws = 512;
  double acc = 0.0;
  Eigen::VectorXd eta(n);
  for (int i = 0; i < pilotDraws; ++i) {
    const double lw = propose(mu, f, pilot, eta);
    if (lw != -kInf) acc += std::exp(std::min(lw - sol.logNormConst, 0.0));
  }
  sol.expectedAcceptRate = std::min(1.0, std::max(acc / pilotDraws, 1e-300));
  return sol;
}

// Coordinate Gibbs sampler restricted to the box (fallback path).
Eigen::MatrixXd gibbs_within_box(const GaussianParams& params, const BoxRegion& box,
                                 std::size_t count, Rng& rng) {
  const Eigen::Index n = params.dim();
  const Eigen::MatrixXd L = chol_psd(params.cov);
  const Eigen::MatrixXd Q =
      L.triangularView<Eigen::Lower>().transpose().solve(Eigen::MatrixXd(
          L.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n))));

  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lo = box.lower[i] - params.mean[i];
    const double hi = box.upper[i] - params.mean[i];
    if (std::isfinite(lo) && std::isfinite(hi))
      x[i] = 0.5 * (lo + hi);
    else if (std::isfinite(lo))
      x[i] = lo + 1.0;
    else if (std::isfinite(hi))
      x[i] = hi - 1.0;
    else
      x[i] = 0.0;
  }

  Eigen::MatrixXd draws(count, n);
  const std::size_t total = count + kGibbsBurnin;
  for (std::size_t sweep = 0; sweep < total; ++sweep) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double qii = Q(i, i);
      const double condMean = x[i] - (Q.row(i).dot(x)) / qii;
      const double condSd = std::sqrt(1.0 / qii);
      x[i] = sample_truncnorm_scalar(condMean, condSd, box.lower[i] - params.mean[i],
                                     box.upper[i] - params.mean[i], rng);
    }
    if (sweep >= kGibbsBurnin) draws.row(sweep - kGibbsBurnin) = (x + params.mean).transpose();
  }
  return draws;
}

}  // namespace

namespace detail {
Eigen::MatrixXd sample_tmvn_gibbs(const GaussianParams& params, const BoxRegion& box,
                                  std::size_t count, Rng& rng) {
  validate(params, box);
  return gibbs_within_box(params, box, count, rng);
}
}  // namespace detail

BoxRegion BoxRegion::whole(Eigen::Index n) {
  BoxRegion b;
  b.lower = Eigen::VectorXd::Constant(n, -kInf);
  b.upper = Eigen::VectorXd::Constant(n, kInf);
  return b;
}

bool BoxRegion::contains(const Eigen::VectorXd& x) const {
  for (Eigen::Index i = 0; i < dim(); ++i)
    if (!(x[i] > lower[i] && x[i] < upper[i])) return false;
  return true;
}

BoxRegion BoxRegion::concat(const BoxRegion& other) const {
  BoxRegion b;
  b.lower.resize(dim() + other.dim());
  b.upper.resize(dim() + other.dim());
  b.lower << lower, other.lower;
  b.upper << upper, other.upper;
  return b;
}

BoxRegion BoxRegion::shifted(const Eigen::VectorXd& offset) const {
  BoxRegion b;
  b.lower = lower - offset;
  b.upper = upper - offset;
  return b;
}

Eigen::MatrixXd chol_psd(const Eigen::MatrixXd& m) {
  const Eigen::Index n = m.rows();
  Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(sym);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  sym.diagonal().array() += 1e-8 * std::max(sym.trace() / static_cast<double>(n), 1e-12);
  llt.compute(sym);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  throw std::runtime_error("chol_psd: matrix not positive semidefinite within jitter budget");
}

std::pair<Eigen::MatrixXd, std::vector<int>> cholesky_reordered(const GaussianParams& params,
                                                                const BoxRegion& box) {
  validate(params, box);
  Factored f = cholperm(params, box);
  return {f.L, f.perm};
}

TiltingSolution solve_tilting(const GaussianParams& params, const BoxRegion& box) {
  validate(params, box);
  if (params.dim() == 0) return {};
  return solve_from_factored(cholperm(params, box));
}

BoxProbability box_probability(const GaussianParams& params, const BoxRegion& box,
                               std::size_t nSamples, Rng& rng) {
  validate(params, box);
  const Eigen::Index n = params.dim();
  BoxProbability out;
  if (n == 0) {
    out.estimate = 1.0;
    return out;
  }
  if (n == 1) {
    const double sd = std::sqrt(std::max(params.cov(0, 0), 0.0));
    if (sd == 0.0) {
      const bool inside = params.mean[0] > box.lower[0] && params.mean[0] < box.upper[0];
      out.estimate = inside ? 1.0 : 0.0;
      out.logEstimate = inside ? 0.0 : -kInf;
      out.underflow = !inside;
      return out;
    }
    out.logEstimate = ln_interval_prob((box.lower[0] - params.mean[0]) / sd,
                                       (box.upper[0] - params.mean[0]) / sd);
    out.estimate = std::exp(out.logEstimate);
    out.underflow = out.logEstimate < -690.0;
    return out;
  }
  if (nSamples == 0) throw std::invalid_argument("box_probability: nSamples must be positive");

  Factored f = cholperm(params, box);
  TiltingSolution sol = solve_from_factored(f);
  const Eigen::VectorXd mu =
      sol.converged ? sol.shift : Eigen::VectorXd::Zero(n);  // untilted fallback

  // log-sum-exp accumulation of the importance weights
  std::vector<double> lw(nSamples);
  double maxw = -kInf;
  Eigen::VectorXd eta(n);
  for (std::size_t i = 0; i < nSamples; ++i) {
    lw[i] = propose(mu, f, rng, eta);
    maxw = std::max(maxw, lw[i]);
  }
  if (maxw == -kInf) {
    out.logEstimate = -kInf;
    out.relErr = kInf;
    out.underflow = true;
    return out;
  }
  double s1 = 0.0, s2 = 0.0;
  for (double w : lw) {
    if (w == -kInf) continue;
    const double e = std::exp(w - maxw);
    s1 += e;
    s2 += e * e;
  }
  const double nS = static_cast<double>(nSamples);
  out.logEstimate = std::min(maxw + std::log(s1 / nS), 0.0);
  out.estimate = std::exp(out.logEstimate);
  const double mean = s1 / nS;
  const double var = std::max(s2 / nS - mean * mean, 0.0);
  out.relErr = std::sqrt(var / nS) / mean;
  out.underflow = out.logEstimate < -690.0;
  if (out.underflow) out.estimate = 0.0;
  return out;
}

TmvnDraws sample_tmvn(const GaussianParams& params, const BoxRegion& box, std::size_t count,
                      Rng& rng) {
  validate(params, box);
  if (count == 0) throw std::invalid_argument("sample_tmvn: count must be positive");
  const Eigen::Index n = params.dim();
  TmvnDraws out;
  out.draws.resize(count, n);
  if (n == 0) return out;

  Factored f = cholperm(params, box);
  TiltingSolution sol = solve_from_factored(f);
  if (sol.logNormConst < -690.0)
    throw std::runtime_error("sample_tmvn: box has zero mass numerically");

  bool fallback = !sol.converged || sol.expectedAcceptRate < kAcceptFloor;
  if (!fallback) {
    std::size_t got = 0, proposed = 0;
    Eigen::VectorXd eta(n);
    while (got < count) {
      const double lw = propose(sol.shift, f, rng, eta);
      ++proposed;
      if (lw != -kInf && std::log(runif(rng)) <= lw - sol.logNormConst) {
        Eigen::VectorXd xp = f.L.triangularView<Eigen::Lower>() * eta;
        for (Eigen::Index k = 0; k < n; ++k) {
          const int orig = f.perm[static_cast<std::size_t>(k)];
          double v = xp[k] + params.mean[orig];
          if (v <= box.lower[orig]) v = std::nextafter(box.lower[orig], box.upper[orig]);
          if (v >= box.upper[orig]) v = std::nextafter(box.upper[orig], box.lower[orig]);
          out.draws(got, orig) = v;
        }
        ++got;
      }
      if (proposed >= 4096 && got < std::max<std::size_t>(1, proposed / 1000)) {
        fallback = true;  // realized acceptance collapsed
        break;
      }
    }
  }
  if (fallback) {
    out.draws = gibbs_within_box(params, box, count, rng);
    out.approximate = true;
    for (Eigen::Index r = 0; r < out.draws.rows(); ++r)
      for (Eigen::Index i = 0; i < n; ++i) {
        double v = out.draws(r, i);
        if (v <= box.lower[i]) v = std::nextafter(box.lower[i], box.upper[i]);
        if (v >= box.upper[i]) v = std::nextafter(box.upper[i], box.lower[i]);
        out.draws(r, i) = v;
      }
  }
  return out;
}

}  // namespace star::gauss
