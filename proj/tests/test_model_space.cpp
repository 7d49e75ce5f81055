#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "star/model_space.hpp"

using namespace star;
using namespace star::models;

namespace {

linear::StarLinearModel toy_model(double psi) {
  linear::StarLinearModel m;
  m.X.resize(5, 1);
  m.X << 1.0, 1.0, 1.0, 1.0, 1.0;
  m.y.resize(5);
  m.y << 2, 3, 2, 4, 3;
  m.scheme = discrete::RoundingScheme::count_bounded(8.0);
  m.transform = discrete::Transformation::identity();
  m.prior = linear::GPrior{psi, Eigen::VectorXd()};
  m.sigma = 1.0;
  return m;
}

CandidateSet identical_set(int k) {
  CandidateSet set;
  for (int i = 0; i < k; ++i) set.candidates.push_back({toy_model(10.0), Eigen::MatrixXd()});
  set.priorWeights = Eigen::VectorXd::Constant(k, 1.0 / k);
  return set;
}

}  // namespace

TEST_CASE("posterior_model_probs") {
  SUBCASE("single candidate gets weight one") {
    Rng rng(1);
    const auto probs = posterior_model_probs(identical_set(1), 5000, rng);
    CHECK(probs.probs[0] == doctest::Approx(1.0));
  }
  SUBCASE("identical candidates with equal priors share the weight") {
    Rng rng(2);
    const auto probs = posterior_model_probs(identical_set(3), 60000, rng);
    for (int i = 0; i < 3; ++i)
      CHECK(probs.probs[i] ==
            doctest::Approx(1.0 / 3.0).epsilon(3.0 * probs.relErr.maxCoeff() + 5e-3));
    CHECK(probs.probs.sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("weight ratio matches the marginal likelihood ratio") {
    CandidateSet set;
    set.candidates.push_back({toy_model(10.0), Eigen::MatrixXd()});
    set.candidates.push_back({toy_model(0.1), Eigen::MatrixXd()});
    set.priorWeights = Eigen::VectorXd::Constant(2, 0.5);
    Rng r1(3), r2(4);
    const auto probs = posterior_model_probs(set, 80000, r1);
    const auto ml1 = linear::marginal_likelihood(set.candidates[0].model, 80000, r2);
    const auto ml2 = linear::marginal_likelihood(set.candidates[1].model, 80000, r2);
    const double wantRatio = std::exp(ml1.logValue - ml2.logValue);
    const double gotRatio = probs.probs[0] / probs.probs[1];
    CHECK(gotRatio == doctest::Approx(wantRatio)
                          .epsilon(3.0 * (ml1.relErr + ml2.relErr + probs.relErr.sum()) + 0.02));
  }
  SUBCASE("invariant under rescaling of the prior weights") {
    CandidateSet a = identical_set(2);
    a.candidates[1].model = toy_model(0.5);
    CandidateSet b = a;
    b.priorWeights *= 37.0;
    Rng r1(5), r2(5);
    const auto pa = posterior_model_probs(a, 20000, r1);
    const auto pb = posterior_model_probs(b, 20000, r2);
    CHECK(std::abs(pa.probs[0] - pb.probs[0]) < 1e-12);
  }
  SUBCASE("argmax is stable across seeds on a well-separated pair") {
    CandidateSet set;
    set.candidates.push_back({toy_model(10.0), Eigen::MatrixXd()});
    auto bad = toy_model(10.0);
    bad.prior = linear::GPrior{10.0, Eigen::VectorXd::Constant(1, -20.0)};  // absurd prior mean
    set.candidates.push_back({bad, Eigen::MatrixXd()});
    set.priorWeights = Eigen::VectorXd::Constant(2, 0.5);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      Rng rng(seed);
      const auto probs = posterior_model_probs(set, 4000, rng);
      CHECK(probs.selected == 0);
      CHECK_FALSE(probs.closeCall);
    }
  }
}

TEST_CASE("model_averaged_predict") {
  Eigen::MatrixXd xt(1, 1);
  xt << 1.0;
  SUBCASE("single model equals the plain predictive in law") {
    Rng r1(6), r2(7);
    const int count = 60000;
    const auto avg = model_averaged_predict(identical_set(1), {xt, static_cast<std::size_t>(count)},
                                            5000, r1);
    const auto direct = linear::predict_via_posterior(toy_model(10.0),
                                                      {xt, static_cast<std::size_t>(count)}, r2);
    for (long q = 0; q <= 8; ++q) {
      const double pa = (avg.draws.col(0).array() == q).cast<double>().sum() / count;
      const double pb = (direct.col(0).array() == q).cast<double>().sum() / count;
      CHECK(std::abs(pa - pb) < 0.01);
    }
  }
  SUBCASE("degenerate prior weights route every draw to one model") {
    CandidateSet set = identical_set(2);
    set.priorWeights << 1.0, 0.0;
    Rng rng(8);
    const auto avg = model_averaged_predict(set, {xt, 500}, 2000, rng);
    for (int s : avg.modelDraws) CHECK(s == 0);
  }
  SUBCASE("realized model frequencies match known weights") {
    CandidateSet set = identical_set(2);
    set.priorWeights << 0.8, 0.2;  // identical likelihoods: posterior = prior
    Rng rng(9);
    const int count = 20000;
    const auto avg = model_averaged_predict(set, {xt, static_cast<std::size_t>(count)}, 30000, rng);
    double f0 = 0.0;
    for (int s : avg.modelDraws) f0 += (s == 0) ? 1.0 : 0.0;
    f0 /= count;
    const double se = std::sqrt(0.8 * 0.2 / count);
    CHECK(std::abs(f0 - 0.8) < 3.0 * se + 0.01);
  }
}
