#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "star/eval_metrics.hpp"
#include "star/normal.hpp"

using namespace star;
using namespace star::metrics;

TEST_CASE("rps") {
  SUBCASE("point mass at the observation scores zero") {
    DiscreteForecast f{{3}, Eigen::VectorXd::Constant(1, 1.0)};
    CHECK(rps(f, 3) == doctest::Approx(0.0));
  }
  SUBCASE("uniform on {0,1} against observed 0") {
    DiscreteForecast f{{0, 1}, Eigen::VectorXd::Constant(2, 0.5)};
    CHECK(rps(f, 0) == doctest::Approx(0.25));
  }
  SUBCASE("point mass one lattice step away scores one") {
    DiscreteForecast f{{4}, Eigen::VectorXd::Constant(1, 1.0)};
    CHECK(rps(f, 5) == doctest::Approx(1.0));
    CHECK(rps(f, 3) == doctest::Approx(1.0));
  }
  SUBCASE("observed outside the support is penalized") {
    DiscreteForecast f{{0, 1, 2}, Eigen::VectorXd::Constant(3, 1.0 / 3.0)};
    CHECK(rps(f, 10) > rps(f, 2));
  }
  SUBCASE("nonnegative and zero only at a matching point mass") {
    DiscreteForecast f{{0, 1, 2}, Eigen::VectorXd(3)};
    f.probs << 0.2, 0.5, 0.3;
    for (long obs = -1; obs <= 3; ++obs) CHECK(rps(f, obs) > 0.0);
  }
  SUBCASE("propriety spot check on a three-point support") {
    Eigen::VectorXd truth(3);
    truth << 0.2, 0.5, 0.3;
    const std::vector<long> support{0, 1, 2};
    auto expected_score = [&](const Eigen::VectorXd& q) {
      double e = 0.0;
      for (int y = 0; y < 3; ++y)
        e += truth[y] * rps(DiscreteForecast{support, q}, support[static_cast<std::size_t>(y)]);
      return e;
    };
    const double best = expected_score(truth);
    Rng rng(1);
    for (int rep = 0; rep < 20; ++rep) {
      Eigen::VectorXd q(3);
      for (int i = 0; i < 3; ++i) q[i] = 0.05 + runif(rng);
      q /= q.sum();
      CHECK(expected_score(q) >= best - 1e-12);
    }
  }
  SUBCASE("malformed pmf errors") {
    DiscreteForecast f{{0, 1}, Eigen::VectorXd(2)};
    f.probs << 0.7, 0.7;
    CHECK_THROWS(rps(f, 0));
  }
}

TEST_CASE("ess") {
  SUBCASE("iid chain has full efficiency") {
    Rng rng(2);
    Eigen::VectorXd chain(10000);
    for (Eigen::Index i = 0; i < chain.size(); ++i) chain[i] = rnorm(rng);
    const auto r = ess(chain);
    CHECK_FALSE(r.degenerate);
    CHECK(r.ess / chain.size() > 0.85);
    CHECK(r.ess / chain.size() <= 1.15);
  }
  SUBCASE("AR(1) with coefficient 0.9 matches the closed-form factor") {
    Rng rng(3);
    const int n = 200000;
    Eigen::VectorXd chain(n);
    double x = 0.0;
    for (int i = 0; i < n; ++i) {
      x = 0.9 * x + rnorm(rng);
      chain[i] = x;
    }
    const double factor = ess(chain).ess / n;
    const double want = (1.0 - 0.9) / (1.0 + 0.9);  // 0.0526
    CHECK(factor > want / 1.5);
    CHECK(factor < want * 1.5);
  }
  SUBCASE("constant chain returns the length with a flag") {
    Eigen::VectorXd chain = Eigen::VectorXd::Constant(50, 2.5);
    const auto r = ess(chain);
    CHECK(r.degenerate);
    CHECK(r.ess == doctest::Approx(50.0));
  }
  SUBCASE("too-short chain errors") {
    CHECK_THROWS(ess(Eigen::VectorXd::Zero(5)));
  }
}

TEST_CASE("interval_metrics") {
  SUBCASE("all draws equal to the observation") {
    Eigen::MatrixXi draws = Eigen::MatrixXi::Constant(100, 3, 7);
    Eigen::VectorXi obs = Eigen::VectorXi::Constant(3, 7);
    const auto m = interval_metrics(draws, obs, 0.9);
    CHECK(m.coverage == doctest::Approx(1.0));
    CHECK(m.meanWidth == doctest::Approx(0.0));
  }
  SUBCASE("observation outside every draw") {
    Eigen::MatrixXi draws = Eigen::MatrixXi::Constant(100, 2, 0);
    Eigen::VectorXi obs = Eigen::VectorXi::Constant(2, 10);
    CHECK(interval_metrics(draws, obs, 0.9).coverage == doctest::Approx(0.0));
  }
  SUBCASE("standard normal integer draws give the familiar width") {
    Rng rng(4);
    const int count = 50000;
    Eigen::MatrixXi draws(count, 1);
    for (int i = 0; i < count; ++i)
      draws(i, 0) = static_cast<int>(std::lround(10.0 * rnorm(rng)));
    Eigen::VectorXi obs = Eigen::VectorXi::Zero(1);
    const auto m = interval_metrics(draws, obs, 0.9);
    CHECK(std::abs(m.meanWidth / 10.0 - 2.0 * 1.6449) < 1.0);
  }
  SUBCASE("too few draws for the level errors") {
    Eigen::MatrixXi draws = Eigen::MatrixXi::Zero(5, 1);
    Eigen::VectorXi obs = Eigen::VectorXi::Zero(1);
    CHECK_THROWS(interval_metrics(draws, obs, 0.9));
  }
}

TEST_CASE("roc_auc") {
  SUBCASE("perfect separation") {
    Eigen::VectorXd s(6);
    s << 0.1, 0.2, 0.3, 0.7, 0.8, 0.9;
    const std::vector<int> labels{0, 0, 0, 1, 1, 1};
    CHECK(roc_auc(s, labels).auc == doctest::Approx(1.0));
  }
  SUBCASE("reversed scores") {
    Eigen::VectorXd s(6);
    s << 0.9, 0.8, 0.7, 0.3, 0.2, 0.1;
    const std::vector<int> labels{0, 0, 0, 1, 1, 1};
    CHECK(roc_auc(s, labels).auc == doctest::Approx(0.0));
  }
  SUBCASE("independent scores hover near one half") {
    Rng rng(5);
    const int n = 20000;
    Eigen::VectorXd s(n);
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) {
      s[i] = rnorm(rng);
      labels[i] = (runif(rng) < 0.5) ? 1 : 0;
    }
    CHECK(roc_auc(s, labels).auc == doctest::Approx(0.5).epsilon(0.05));
  }
  SUBCASE("invariant under strictly increasing transforms") {
    Rng rng(6);
    const int n = 500;
    Eigen::VectorXd s(n);
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) {
      s[i] = rnorm(rng);
      labels[i] = (rnorm(rng) + s[i] > 0.0) ? 1 : 0;
    }
    const double a1 = roc_auc(s, labels).auc;
    Eigen::VectorXd t = (s.array() * 3.0).exp();
    CHECK(roc_auc(t, labels).auc == doctest::Approx(a1).epsilon(1e-14));
  }
  SUBCASE("midrank tie handling") {
    Eigen::VectorXd s(4);
    s << 1.0, 1.0, 1.0, 1.0;
    const std::vector<int> labels{0, 1, 0, 1};
    CHECK(roc_auc(s, labels).auc == doctest::Approx(0.5));
  }
  SUBCASE("single-class labels error") {
    Eigen::VectorXd s(3);
    s << 1, 2, 3;
    CHECK_THROWS(roc_auc(s, {1, 1, 1}));
  }
}
