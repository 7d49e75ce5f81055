#include "star/nonlinear_basis.hpp"

#include <cmath>
#include <stdexcept>

#include "star/gauss_kernel.hpp"

namespace star::basis {

BasisSpec BasisSpec::bspline(int degree, int interiorKnots) {
  if (degree < 1 || interiorKnots < 0) throw std::invalid_argument("bspline: bad configuration");
  return {Kind::BSpline, degree, interiorKnots};
}

BasisSpec BasisSpec::orth_poly(int degree) {
  if (degree < 1) throw std::invalid_argument("orth_poly: degree must be >= 1");
  return {Kind::OrthPoly, degree, 0};
}

namespace {

// Cox-de Boor evaluation over a clamped knot vector.
double bspline_value(const Eigen::VectorXd& knots, int degree, int i, double t) {
  if (degree == 0)
    return (t >= knots[i] && t < knots[i + 1]) ? 1.0 : 0.0;
  double left = 0.0, right = 0.0;
  const double dl = knots[i + degree] - knots[i];
  if (dl > 0.0) left = (t - knots[i]) / dl * bspline_value(knots, degree - 1, i, t);
  const double dr = knots[i + degree + 1] - knots[i + 1];
  if (dr > 0.0)
    right = (knots[i + degree + 1] - t) / dr * bspline_value(knots, degree - 1, i + 1, t);
  return left + right;
}

Eigen::VectorXd clamped_knots(const BasisSpec& spec, double lo, double hi) {
  const int d = spec.degree;
  const int m = spec.interiorKnots;
  Eigen::VectorXd knots(2 * (d + 1) + m);
  for (int i = 0; i <= d; ++i) knots[i] = lo;
  for (int i = 0; i < m; ++i) knots[d + 1 + i] = lo + (hi - lo) * (i + 1) / (m + 1);
  for (int i = 0; i <= d; ++i) knots[d + 1 + m + i] = hi;
  return knots;
}

}  // namespace

Eigen::MatrixXd raw_basis(const BasisSpec& spec, const Eigen::VectorXd& tau,
                          const Eigen::VectorXd& knots, double tauMin, double tauMax) {
  const Eigen::Index n = tau.size();
  if (spec.kind == BasisSpec::Kind::OrthPoly) {
    // plain power basis 0..degree on a standardized input; orthogonality is
    // delivered by the SVD reparametrization
    const double c = 0.5 * (tauMin + tauMax);
    const double s = std::max(0.5 * (tauMax - tauMin), 1e-12);
    Eigen::MatrixXd b(n, spec.degree + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double u = (tau[i] - c) / s;
      double v = 1.0;
      for (int j = 0; j <= spec.degree; ++j) {
        b(i, j) = v;
        v *= u;
      }
    }
    return b;
  }
  const int p = static_cast<int>(knots.size()) - spec.degree - 1;
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, p);
  const double hiEdge = knots[knots.size() - 1];
  for (Eigen::Index i = 0; i < n; ++i) {
    double t = std::min(std::max(tau[i], knots[0]), hiEdge);
    // make the last basis function right-continuous at the upper edge
    if (t >= hiEdge) t = std::nextafter(hiEdge, knots[0]);
    for (int j = 0; j < p; ++j) b(i, j) = bspline_value(knots, spec.degree, j, t);
  }
  return b;
}

DiagonalizedBasis build_diagonalized(const BasisSpec& spec, const Eigen::VectorXd& tau) {
  if (tau.size() < 2) throw std::invalid_argument("build_diagonalized: need at least two inputs");
  DiagonalizedBasis out;
  out.spec = spec;
  out.tauMin = tau.minCoeff();
  out.tauMax = tau.maxCoeff();
  if (!(out.tauMax > out.tauMin))
    throw std::invalid_argument("build_diagonalized: degenerate input grid");
  if (spec.kind == BasisSpec::Kind::BSpline)
    out.knots = clamped_knots(spec, out.tauMin, out.tauMax);

  const Eigen::MatrixXd braw = raw_basis(spec, tau, out.knots, out.tauMin, out.tauMax);
  if (braw.rows() < braw.cols())
    throw std::invalid_argument("build_diagonalized: need n >= basis dimension");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(braw, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd sv = svd.singularValues();
  const double tol = 1e-10 * sv[0];
  Eigen::Index keep = 0;
  while (keep < sv.size() && sv[keep] > tol) ++keep;
  out.reduced = keep < sv.size();

  out.X = svd.matrixU().leftCols(keep) * sv.head(keep).asDiagonal();
  out.d = sv.head(keep).array().square();
  out.rotation = svd.matrixV().leftCols(keep);
  return out;
}

Eigen::MatrixXd DiagonalizedBasis::at(const Eigen::VectorXd& tauNew) const {
  return raw_basis(spec, tauNew, knots, tauMin, tauMax) * rotation;
}

Eigen::MatrixXi predict_nl(const DiagonalizedBasis& basis, const Eigen::VectorXi& y,
                           const discrete::RoundingScheme& scheme,
                           const discrete::Transformation& transform, double psi, double sigma,
                           const Eigen::VectorXd& tauNew, std::size_t count, Rng& rng) {
  if (!(psi > 0.0) || !(sigma > 0.0))
    throw std::invalid_argument("predict_nl: psi and sigma must be positive");
  if (y.size() != basis.n()) throw std::invalid_argument("predict_nl: y length mismatch");
  const Eigen::Index n = basis.n(), nt = tauNew.size();

  // V0 ~ N(0, sigma^2 (psi X X' + I)) truncated to g(A_y)
  Eigen::MatrixXd v0cov = psi * basis.X * basis.X.transpose();
  v0cov.diagonal().array() += 1.0;
  v0cov *= sigma * sigma;
  const gauss::BoxRegion box = discrete::interval_image(transform, scheme, y);
  gauss::GaussianParams pz{Eigen::VectorXd::Zero(n), 0.5 * (v0cov + v0cov.transpose())};
  const Eigen::MatrixXd v0 = gauss::sample_tmvn(pz, box, count, rng).draws;

  // diagonal shrinkage 1/(1 + psi d_j); well-defined at d_j = 0
  const Eigen::VectorXd shrink = (1.0 + psi * basis.d.array()).inverse();
  const Eigen::MatrixXd xt = basis.at(tauNew);                        // nt x p
  const Eigen::MatrixXd cross = psi * xt * shrink.asDiagonal() *
                                basis.X.transpose();                  // nt x n

  Eigen::MatrixXd v1cov = psi * xt * shrink.asDiagonal() * xt.transpose();
  v1cov.diagonal().array() += 1.0;
  v1cov *= sigma * sigma;
  const Eigen::MatrixXd l1 = gauss::chol_psd(v1cov);

  Eigen::MatrixXi out(count, nt);
  Eigen::VectorXd eps(nt);
  for (std::size_t i = 0; i < count; ++i) {
    for (Eigen::Index j = 0; j < nt; ++j) eps[j] = rnorm(rng);
    const Eigen::VectorXd z = l1.triangularView<Eigen::Lower>() * eps +
                              cross * v0.row(i).transpose();
    for (Eigen::Index j = 0; j < nt; ++j)
      out(i, j) = static_cast<int>(discrete::round_latent(scheme, transform.inverse(z[j])));
  }
  return out;
}

}  // namespace star::basis
