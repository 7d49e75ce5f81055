#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "star/nonlinear_basis.hpp"
#include "star/star_linear.hpp"

using namespace star;
using namespace star::basis;

namespace {
Eigen::VectorXd grid(int n) {
  Eigen::VectorXd tau(n);
  for (int i = 0; i < n; ++i) tau[i] = static_cast<double>(i) / (n - 1);
  return tau;
}
}  // namespace

TEST_CASE("build_diagonalized") {
  SUBCASE("X'X is diagonal for both basis kinds") {
    for (const auto& spec : {BasisSpec::orth_poly(4), BasisSpec::bspline(3, 6)}) {
      const auto b = build_diagonalized(spec, grid(80));
      const Eigen::MatrixXd xtx = b.X.transpose() * b.X;
      double offdiag = 0.0;
      for (Eigen::Index i = 0; i < xtx.rows(); ++i)
        for (Eigen::Index j = 0; j < xtx.cols(); ++j)
          if (i != j) offdiag = std::max(offdiag, std::abs(xtx(i, j)));
      CHECK(offdiag < 1e-8 * b.d.maxCoeff());
      CHECK((xtx.diagonal() - b.d).cwiseAbs().maxCoeff() < 1e-8 * b.d.maxCoeff());
    }
  }
  SUBCASE("fitted values are invariant under the reparametrization") {
    Rng rng(3);
    const auto spec = BasisSpec::bspline(3, 5);
    const Eigen::VectorXd tau = grid(60);
    const auto b = build_diagonalized(spec, tau);
    const Eigen::MatrixXd raw = raw_basis(spec, tau, b.knots, b.tauMin, b.tauMax);
    for (int rep = 0; rep < 5; ++rep) {
      Eigen::VectorXd thetaRaw(raw.cols());
      for (Eigen::Index j = 0; j < thetaRaw.size(); ++j) thetaRaw[j] = rnorm(rng);
      const Eigen::VectorXd direct = raw * thetaRaw;
      const Eigen::VectorXd mapped = b.X * (b.rotation.transpose() * thetaRaw);
      CHECK((direct - mapped).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
  SUBCASE("rank-deficient basis reduces the dimension with a flag") {
    // three distinct inputs repeated cannot support a degree-4 polynomial
    Eigen::VectorXd tau(9);
    tau << 0, 0, 0, 0.5, 0.5, 0.5, 1, 1, 1;
    const auto b = build_diagonalized(BasisSpec::orth_poly(4), tau);
    CHECK(b.reduced);
    CHECK(b.p() == 3);
  }
  SUBCASE("evaluation at new points matches training columns on the grid") {
    const auto spec = BasisSpec::bspline(3, 4);
    const Eigen::VectorXd tau = grid(40);
    const auto b = build_diagonalized(spec, tau);
    const Eigen::MatrixXd xt = b.at(tau);
    CHECK((xt - b.X).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("shrinkage identity: 1 - psi d/(1 + psi d) == 1/(1 + psi d)") {
  for (double psi : {1e-6, 1e-2, 1.0, 1e3, 1e6}) {
    for (double d : {0.0, 1e-6, 0.5, 10.0, 1e3, 1e6}) {
      const double a = 1.0 - psi * d / (1.0 + psi * d);
      const double b = 1.0 / (1.0 + psi * d);
      CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)));
    }
  }
}

TEST_CASE("predict_nl") {
  const auto scheme = discrete::RoundingScheme::count_bounded(30.0);
  const auto ident = discrete::Transformation::identity();

  SUBCASE("prior collapse: psi -> 0 leaves pure observation noise") {
    const auto b = build_diagonalized(BasisSpec::bspline(3, 4), grid(40));
    Eigen::VectorXi y = Eigen::VectorXi::Constant(40, 3);
    Rng rng(5);
    Eigen::VectorXd tnew(3);
    tnew << 0.1, 0.5, 0.9;
    const auto scheme2 = discrete::RoundingScheme::floor_half();
    const Eigen::MatrixXi draws = predict_nl(b, y, scheme2, ident, 1e-10, 1.0, tnew, 20000, rng);
    for (int j = 0; j < 3; ++j) {
      const double m = draws.col(j).cast<double>().mean();
      CHECK(std::abs(m) < 4.0 * std::sqrt(1.1 / 20000.0));
    }
  }
  SUBCASE("matches the generic latent-predictive path in moments") {
    const int n = 30;
    const Eigen::VectorXd tau = grid(n);
    const auto b = build_diagonalized(BasisSpec::orth_poly(3), tau);
    Eigen::VectorXi y(n);
    for (int i = 0; i < n; ++i)
      y[i] = static_cast<int>(std::round(5.0 + 4.0 * std::sin(3.0 * tau[i])));
    const double psi = 50.0, sigma = 0.8;

    Eigen::VectorXd tnew(2);
    tnew << 0.25, 0.75;
    Rng r1(7), r2(8);
    const int count = 60000;
    const Eigen::MatrixXi fast = predict_nl(b, y, scheme, ident, psi, sigma, tnew, count, r1);

    // generic route: linear model on the diagonalized design with prior
    // N(0, psi sigma^2 I)
    linear::StarLinearModel m;
    m.X = b.X;
    m.y = y;
    m.scheme = scheme;
    m.transform = ident;
    m.prior = linear::GeneralPrior{
        Eigen::VectorXd::Zero(b.p()),
        psi * sigma * sigma * Eigen::MatrixXd::Identity(b.p(), b.p())};
    m.sigma = sigma;
    const Eigen::MatrixXi generic =
        linear::predict_via_posterior(m, {b.at(tnew), static_cast<std::size_t>(count)}, r2);

    for (int j = 0; j < 2; ++j) {
      const double m1 = fast.col(j).cast<double>().mean();
      const double m2 = generic.col(j).cast<double>().mean();
      const double v1 = (fast.col(j).cast<double>().array() - m1).square().sum() / (count - 1);
      const double v2 = (generic.col(j).cast<double>().array() - m2).square().sum() / (count - 1);
      CHECK(std::abs(m1 - m2) < 3.0 * std::sqrt(v1 / count + v2 / count));
      CHECK(v1 == doctest::Approx(v2).epsilon(0.1));
    }
  }
  SUBCASE("exact zero directions in d are handled") {
    DiagonalizedBasis b;
    b.spec = BasisSpec::orth_poly(1);
    b.X.resize(12, 2);
    b.X.col(0) = Eigen::VectorXd::LinSpaced(12, -1.0, 1.0);
    b.X.col(1).setZero();
    b.d.resize(2);
    b.d << b.X.col(0).squaredNorm(), 0.0;
    b.rotation = Eigen::MatrixXd::Identity(2, 2);
    b.tauMin = -1.0;
    b.tauMax = 1.0;
    Eigen::VectorXi y = Eigen::VectorXi::Constant(12, 2);
    Rng rng(9);
    Eigen::VectorXd tnew(1);
    tnew << 0.0;
    // bypass DiagonalizedBasis::at by predicting at a training point through
    // a hand-built design: reuse the training rows directly
    const Eigen::MatrixXi draws = predict_nl(b, y, scheme, ident, 100.0, 1.0,
                                             b.X.col(0).head(1), 200, rng);
    CHECK(draws.allFinite());
  }
  SUBCASE("marginal law at a shared point is stable across request sets") {
    const int n = 40;
    const auto b = build_diagonalized(BasisSpec::bspline(3, 4), grid(n));
    Eigen::VectorXi y(n);
    for (int i = 0; i < n; ++i) y[i] = 4 + (i % 3);
    Rng r1(10), r2(11);
    Eigen::VectorXd setA(1), setB(3);
    setA << 0.4;
    setB << 0.1, 0.4, 0.9;
    const int count = 40000;
    const Eigen::MatrixXi a = predict_nl(b, y, scheme, ident, 100.0, 1.0, setA, count, r1);
    const Eigen::MatrixXi bd = predict_nl(b, y, scheme, ident, 100.0, 1.0, setB, count, r2);
    // Kolmogorov distance on the shared point (column 0 vs column 1)
    double ks = 0.0;
    for (long q = 0; q <= 12; ++q) {
      const double ca = (a.col(0).array() <= q).cast<double>().sum() / count;
      const double cb = (bd.col(1).array() <= q).cast<double>().sum() / count;
      ks = std::max(ks, std::abs(ca - cb));
    }
    CHECK(ks < 0.02);
  }
}
