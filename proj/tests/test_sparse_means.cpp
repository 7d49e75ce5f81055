#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "star/gauss_kernel.hpp"
#include "star/sparse_means.hpp"

using namespace star;
using namespace star::sparse;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SparseMeansConfig base_config(double sigma = 1.0) {
  SparseMeansConfig c;
  c.scheme = discrete::RoundingScheme::floor_half();
  c.transform = discrete::Transformation::identity();
  c.sigma = sigma;
  return c;
}

}  // namespace

TEST_CASE("marginal_loglik") {
  SUBCASE("psi = 0 makes every inclusion pattern equivalent") {
    auto c = base_config();
    Eigen::VectorXi y(4);
    y << 0, 2, -1, 5;
    Eigen::VectorXi g0 = Eigen::VectorXi::Zero(4), g1 = Eigen::VectorXi::Ones(4);
    CHECK(marginal_loglik(c, y, g0, 0.0) == doctest::Approx(marginal_loglik(c, y, g1, 0.0)));
  }
  SUBCASE("frozen univariate value") {
    auto c = base_config();
    Eigen::VectorXi y(1), g(1);
    y << 0;
    g << 0;
    CHECK(marginal_loglik(c, y, g, 4.0) == doctest::Approx(-0.9599163337).epsilon(1e-9));
  }
  SUBCASE("agrees with the general kernel on a diagonal instance") {
    auto c = base_config(0.9);
    Eigen::VectorXi y(5), g(5);
    y << 1, 0, -2, 4, 2;
    g << 1, 0, 0, 1, 1;
    const double psi = 3.0;
    const double fast = marginal_loglik(c, y, g, psi);

    gauss::GaussianParams p;
    p.mean = Eigen::VectorXd::Zero(5);
    Eigen::VectorXd v(5);
    for (int i = 0; i < 5; ++i) v[i] = 0.81 * (1.0 + psi * g[i]);
    p.cov = v.asDiagonal();
    const auto box = discrete::interval_image(c.transform, c.scheme, y);
    Rng rng(1);
    const auto pr = gauss::box_probability(p, box, 50000, rng);
    CHECK(std::exp(fast) == doctest::Approx(pr.estimate).epsilon(1e-3));
  }
  SUBCASE("empty transformed interval gives -inf") {
    auto c = base_config();
    c.scheme = discrete::RoundingScheme::floor_half(-2.0, 60.0);
    Eigen::VectorXi y(1), g(1);
    y << 50;  // interval [49.5, 50.5) under sigma=1: mass underflows
    g << 0;
    CHECK(marginal_loglik(c, y, g, 1.0) < -690.0);
  }
}

TEST_CASE("inclusion odds oracle") {
  // frozen: [Phi(5.5/sqrt(5)) - Phi(4.5/sqrt(5))]/[Phi(5.5) - Phi(4.5)]
  auto c = base_config();
  const double ratio = std::exp(inclusion_loglik_ratio(c, 5, 4.0));
  CHECK(ratio == doctest::Approx(4478.8225141).epsilon(1e-6));
}

TEST_CASE("gibbs_sweep") {
  SUBCASE("flat likelihood keeps inclusion at the prior odds") {
    auto c = base_config();
    c.psiPrior = PsiPrior::fixed_at(1e-12);
    Eigen::VectorXi y(3);
    y << 1, -2, 0;
    Rng rng(2);
    double freq = 0.0;
    const int reps = 4000;
    for (int r = 0; r < reps; ++r) {
      SparseMeansState s;
      s.gamma = Eigen::VectorXi::Zero(3);
      s.theta = Eigen::VectorXd::Zero(3);
      s.pi = 0.5;
      s.psi = 1e-12;
      s = gibbs_sweep(c, y, s, rng);
      freq += s.gamma[0];
    }
    freq /= reps;
    CHECK(std::abs(freq - 0.5) < 3.0 * std::sqrt(0.25 / reps));
  }
  SUBCASE("pi update sees the conjugate counts") {
    auto c = base_config();
    c.psiPrior = PsiPrior::fixed_at(25.0);
    const int n = 40;
    Eigen::VectorXi y = Eigen::VectorXi::Constant(n, 20);  // overwhelming inclusion評
    Rng rng(3);
    SparseMeansState s;
    s.gamma = Eigen::VectorXi::Ones(n);
    s.theta = Eigen::VectorXd::Zero(n);
    s.pi = 0.5;
    s.psi = 25.0;
    double piMean = 0.0;
    const int reps = 3000;
    for (int r = 0; r < reps; ++r) {
      s = gibbs_sweep(c, y, s, rng);
      for (int i = 0; i < n; ++i) CHECK(s.gamma[i] == 1);  // ratio is enormous
      piMean += s.pi;
    }
    piMean /= reps;
    // Beta(1 + n, 1) mean
    CHECK(piMean == doctest::Approx((1.0 + n) / (n + 2.0)).epsilon(0.02));
  }
}

TEST_CASE("sample_theta") {
  SUBCASE("all-spike pattern returns the zero vector") {
    auto c = base_config();
    Eigen::VectorXi y(3), g = Eigen::VectorXi::Zero(3);
    y << 1, 2, 3;
    Rng rng(4);
    CHECK(sample_theta(c, y, g, 4.0, rng).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("slab draws match a 1-d quadrature posterior") {
    // y = 3, sigma = 1, psi = 4, floor-half: posterior over theta given
    // inclusion; oracle integrates phi(t;0,4) *
    // {Phi(3.5 - t) - Phi(2.5 - t)} on a grid.
    auto c = base_config();
    Eigen::VectorXi y(1), g(1);
    y << 3;
    g << 1;
    const int grid = 4001;
    double z = 0.0, m1 = 0.0;
    for (int i = 0; i < grid; ++i) {
      const double t = -10.0 + 20.0 * i / (grid - 1);
      const double f = std::exp(-0.5 * t * t / 4.0) *
                       (gauss::norm_cdf(3.5 - t) - gauss::norm_cdf(2.5 - t));
      z += f;
      m1 += t * f;
    }
    const double oracleMean = m1 / z;
    Rng rng(5);
    double mean = 0.0;
    const int reps = 200000;
    for (int r = 0; r < reps; ++r) mean += sample_theta(c, y, g, 4.0, rng)[0];
    mean /= reps;
    CHECK(mean == doctest::Approx(oracleMean).epsilon(0.01));
  }
  SUBCASE("psi -> 0 collapses to the spike") {
    auto c = base_config();
    Eigen::VectorXi y(2), g = Eigen::VectorXi::Ones(2);
    y << 2, -1;
    Rng rng(6);
    CHECK(sample_theta(c, y, g, 1e-9, rng).cwiseAbs().maxCoeff() < 1e-3);
  }
}

TEST_CASE("run_chain") {
  SUBCASE("strong signals are recovered") {
    auto c = base_config();
    const int n = 30;
    Eigen::VectorXi y(n);
    for (int i = 0; i < n; ++i) y[i] = (i % 5 == 0) ? 20 : 0;
    Rng rng(7);
    const auto res = run_chain(c, y, 600, 100, rng);
    for (int i = 0; i < n; ++i) {
      if (i % 5 == 0)
        CHECK(res.inclusionProbs[i] > 0.95);
      else
        CHECK(res.inclusionProbs[i] < 0.5);
    }
  }
  SUBCASE("null data keep inclusion near the prior") {
    auto c = base_config();
    const int n = 60;
    Eigen::VectorXi y = Eigen::VectorXi::Zero(n);
    Rng rng(8);
    const auto res = run_chain(c, y, 800, 200, rng);
    CHECK(res.inclusionProbs.mean() < 0.5 + 0.1);
  }
  SUBCASE("states respect the spike zero-enforcement and the psi truncation") {
    auto c = base_config();
    const int n = 25;
    Eigen::VectorXi y(n);
    for (int i = 0; i < n; ++i) y[i] = (i % 4 == 0) ? 6 : 0;
    Rng rng(9);
    const auto res = run_chain(c, y, 400, 50, rng);
    for (const auto& s : res.states) {
      for (int i = 0; i < n; ++i) {
        if (s.gamma[i] == 0) CHECK(s.theta[i] == 0.0);
        if (s.gamma[i] == 1) CHECK(s.theta[i] != 0.0);
      }
      // uniform-root prior on psi^{1/2} bounds psi by n from above
      CHECK(1.0 / s.psi >= 1.0 / static_cast<double>(n) - 1e-12);
    }
  }
  SUBCASE("byte-identical across equal seeds") {
    auto c = base_config();
    Eigen::VectorXi y(12);
    for (int i = 0; i < 12; ++i) y[i] = (i % 3 == 0) ? 8 : 0;
    Rng r1(10), r2(10);
    const auto a = run_chain(c, y, 100, 20, r1);
    const auto b = run_chain(c, y, 100, 20, r2);
    CHECK((a.thetaDraws - b.thetaDraws).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.inclusionProbs - b.inclusionProbs).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("single-coordinate stationary inclusion matches the two-model Bayes factor") {
    // n=1 with fixed psi and fixed pi via a huge-Beta prior pin
    auto c = base_config();
    c.psiPrior = PsiPrior::fixed_at(4.0);
    c.aPi = 5e6;
    c.bPi = 5e6;  // pins pi ~= 0.5
    Eigen::VectorXi y(1);
    y << 2;
    Rng rng(11);
    const auto res = run_chain(c, y, 30000, 1000, rng);
    const double lr = std::exp(inclusion_loglik_ratio(c, 2, 4.0));
    const double want = lr / (1.0 + lr);  // prior odds one
    const double se = std::sqrt(want * (1.0 - want) / 29000.0);
    CHECK(std::abs(res.inclusionProbs[0] - want) < 5.0 * se + 0.01);
  }
}

TEST_CASE("estimate_sigma_2means") {
  const auto scheme = discrete::RoundingScheme::floor_half();
  const auto ident = discrete::Transformation::identity();
  SUBCASE("two separated clusters with unit spread") {
    Rng rng(12);
    const int n = 300;
    Eigen::VectorXi y(n);
    for (int i = 0; i < n; ++i) {
      const double z = (i % 2 == 0) ? rnorm(rng) : 10.0 + rnorm(rng);
      y[i] = static_cast<int>(discrete::round_h(scheme, z));
    }
    const double s = estimate_sigma_2means(y, scheme, ident);
    CHECK(s > 0.8);
    CHECK(s < 1.2);
  }
  SUBCASE("exactly two distinct values floor at the rounding dispersion") {
    Eigen::VectorXi y(40);
    for (int i = 0; i < 40; ++i) y[i] = (i % 2 == 0) ? 0 : 7;
    const double s = estimate_sigma_2means(y, scheme, ident);
    CHECK(s == doctest::Approx(1.0 / std::sqrt(12.0)).epsilon(1e-9));
  }
  SUBCASE("scale equivariance through the transformation") {
    Eigen::VectorXi y(24);
    for (int i = 0; i < 24; ++i) y[i] = (i % 2 == 0) ? (i % 4) : 9 + (i % 3);
    const double s1 = estimate_sigma_2means(y, scheme, ident);
    const double cscale = 2.5;
    const auto scaled = discrete::Transformation::spline(
        discrete::Transformation::Kind::NpCdf, {-100.0, 100.0},
        {-100.0 * cscale, 100.0 * cscale});
    const double s2 = estimate_sigma_2means(y, scheme, scaled);
    CHECK(s2 == doctest::Approx(cscale * s1).epsilon(1e-9));
  }
  SUBCASE("degenerate input errors") {
    Eigen::VectorXi y = Eigen::VectorXi::Constant(10, 3);
    CHECK_THROWS(estimate_sigma_2means(y, scheme, ident));
    Eigen::VectorXi tiny(3);
    tiny << 1, 2, 3;
    CHECK_THROWS(estimate_sigma_2means(tiny, scheme, ident));
  }
}
