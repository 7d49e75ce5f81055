#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "star/star_c.h"

namespace fs = std::filesystem;

namespace {

star_scheme count_scheme(double ymax) {
  star_scheme s;
  s.kind = STAR_SCHEME_COUNT_BOUNDED;
  s.y_min = 0.0;
  s.y_max = ymax;
  return s;
}

struct Fixture {
  std::vector<double> x;   // row-major n*p
  std::vector<int32_t> y;
  size_t n = 6, p = 2;

  Fixture() {
    x = {1.0, 0.5, 1.0, -0.3, 1.0, 1.2, 1.0, -1.0, 1.0, 0.1, 1.0, 0.7};
    y = {1, 0, 3, 0, 2, 2};
  }
};

}  // namespace

TEST_CASE("rng and transform handles") {
  star_rng* rng = star_rng_new(42);
  REQUIRE(rng != nullptr);

  star_transform* ident = star_transform_identity();
  REQUIRE(ident != nullptr);
  double v = 0.0;
  CHECK(star_transform_eval(ident, 2.5, &v) == STAR_OK);
  CHECK(v == doctest::Approx(2.5));

  star_transform* bc = star_transform_box_cox(0.5);
  REQUIRE(bc != nullptr);
  CHECK(star_transform_eval(bc, 4.0, &v) == STAR_OK);
  CHECK(v == doctest::Approx(4.0));
  CHECK(star_transform_inverse(bc, 4.0, &v) == STAR_OK);
  CHECK(v == doctest::Approx(4.0));

  SUBCASE("invalid lambda reports an error") {
    star_transform* bad = star_transform_box_cox(-1.0);
    CHECK(bad == nullptr);
    CHECK(std::strlen(star_last_error()) > 0);
  }

  SUBCASE("fitted transform serializes through JSON") {
    const std::vector<int32_t> y{0, 1, 1, 2, 4, 4, 6};
    star_transform* fitted =
        star_transform_fit(y.data(), y.size(), STAR_TRANSFORM_NP_CDF, count_scheme(HUGE_VAL));
    REQUIRE(fitted != nullptr);
    char* json = star_transform_to_json(fitted);
    REQUIRE(json != nullptr);
    star_transform* back = star_transform_from_json(json);
    REQUIRE(back != nullptr);
    double a = 0.0, b = 0.0;
    CHECK(star_transform_eval(fitted, 2.3, &a) == STAR_OK);
    CHECK(star_transform_eval(back, 2.3, &b) == STAR_OK);
    CHECK(a == doctest::Approx(b));
    star_string_free(json);
    star_transform_free(back);
    star_transform_free(fitted);
  }

  star_transform_free(bc);
  star_transform_free(ident);
  star_rng_free(rng);
}

TEST_CASE("model lifecycle and sampling") {
  Fixture f;
  star_transform* ident = star_transform_identity();
  star_model* m = star_model_new(f.x.data(), f.n, f.p, f.y.data(), count_scheme(5.0), ident,
                                 10.0, 1.0);
  REQUIRE(m != nullptr);
  CHECK(star_model_sigma(m) == doctest::Approx(1.0));

  star_rng* rng = star_rng_new(7);
  const size_t count = 5000;
  std::vector<double> draws(count * f.p);
  REQUIRE(star_model_sample_posterior(m, count, rng, draws.data()) == STAR_OK);

  std::vector<double> mean(f.p);
  star_rng* rng2 = star_rng_new(8);
  REQUIRE(star_model_posterior_mean(m, 50000, rng2, mean.data()) == STAR_OK);
  for (size_t j = 0; j < f.p; ++j) {
    double sampleMean = 0.0;
    for (size_t i = 0; i < count; ++i) sampleMean += draws[i * f.p + j];
    sampleMean /= static_cast<double>(count);
    CHECK(std::abs(sampleMean - mean[j]) < 0.1);
  }

  SUBCASE("prediction respects the support") {
    std::vector<double> xt{1.0, 0.2};
    std::vector<int32_t> yhat(2000);
    star_rng* rng3 = star_rng_new(9);
    REQUIRE(star_model_predict(m, xt.data(), 1, 2000, rng3, yhat.data()) == STAR_OK);
    for (int32_t v : yhat) {
      CHECK(v >= 0);
      CHECK(v <= 5);
    }
    star_rng_free(rng3);
  }
  SUBCASE("pmf sums near one over the full support") {
    std::vector<double> xt{1.0, 0.2};
    std::vector<int64_t> support{0, 1, 2, 3, 4, 5};
    std::vector<double> probs(support.size());
    double rawSum = 0.0;
    star_rng* rng3 = star_rng_new(10);
    REQUIRE(star_model_predictive_pmf(m, xt.data(), support.data(), support.size(), 20000,
                                      rng3, probs.data(), &rawSum) == STAR_OK);
    CHECK(rawSum == doctest::Approx(1.0).epsilon(0.02));
    star_rng_free(rng3);
  }
  SUBCASE("marginal log likelihood and gibbs baseline run") {
    double logml = 0.0, relerr = 0.0;
    star_rng* rng3 = star_rng_new(11);
    REQUIRE(star_model_marginal_loglik(m, 20000, rng3, &logml, &relerr) == STAR_OK);
    CHECK(logml < 0.0);
    std::vector<double> chain(500 * f.p);
    REQUIRE(star_model_gibbs_da(m, 500, 100, rng3, chain.data()) == STAR_OK);
    star_rng_free(rng3);
  }
  SUBCASE("model weights over identical candidates are uniform") {
    star_model* m2 = star_model_new(f.x.data(), f.n, f.p, f.y.data(), count_scheme(5.0), ident,
                                    10.0, 1.0);
    REQUIRE(m2 != nullptr);
    const star_model* models[2] = {m, m2};
    double weights[2] = {0.0, 0.0};
    star_rng* rng3 = star_rng_new(12);
    REQUIRE(star_model_probs(models, 2, nullptr, 40000, rng3, weights) == STAR_OK);
    CHECK(weights[0] == doctest::Approx(0.5).epsilon(0.05));
    star_rng_free(rng3);
    star_model_free(m2);
  }

  star_rng_free(rng2);
  star_rng_free(rng);
  star_model_free(m);
  star_transform_free(ident);
}

TEST_CASE("error paths set codes and messages") {
  Fixture f;
  star_transform* ident = star_transform_identity();
  SUBCASE("support violation is invalid input") {
    std::vector<int32_t> bad = f.y;
    bad[0] = 99;  // outside [0,5]
    star_model* m = star_model_new(f.x.data(), f.n, f.p, bad.data(), count_scheme(5.0), ident,
                                   10.0, 1.0);
    CHECK(m == nullptr);
    CHECK(std::string(star_last_error()).find("support") != std::string::npos);
  }
  SUBCASE("null arguments are rejected") {
    CHECK(star_model_sample_posterior(nullptr, 10, nullptr, nullptr) == STAR_ERR_INVALID);
  }
  SUBCASE("missing file is an IO error") {
    CHECK(star_cmd_fit("/nonexistent/file.csv", "{}", 1, 10, "/tmp/star_capi_x") ==
          STAR_ERR_IO);
  }
  star_transform_free(ident);
}

TEST_CASE("sparse means and metrics through the C surface") {
  std::vector<int32_t> y(60, 0);
  for (size_t i = 0; i < y.size(); i += 6) y[i] = 15;
  star_scheme floorScheme;
  floorScheme.kind = STAR_SCHEME_FLOOR_HALF;
  floorScheme.y_min = -HUGE_VAL;
  floorScheme.y_max = HUGE_VAL;

  star_transform* ident = star_transform_identity();
  star_rng* rng = star_rng_new(13);
  std::vector<double> inclusion(y.size()), thetaMean(y.size());
  REQUIRE(star_sparse_means_run(y.data(), y.size(), floorScheme, ident, -1.0, 1.0, 1.0, -1.0, 0,
                                400, 100, rng, inclusion.data(), thetaMean.data()) == STAR_OK);
  for (size_t i = 0; i < y.size(); ++i) {
    if (y[i] == 15)
      CHECK(inclusion[i] > 0.9);
    else
      CHECK(inclusion[i] < 0.6);
  }

  SUBCASE("metrics") {
    const std::vector<int64_t> support{0, 1};
    const std::vector<double> probs{0.5, 0.5};
    double v = 0.0;
    REQUIRE(star_metric_rps(support.data(), probs.data(), 2, 0, &v) == STAR_OK);
    CHECK(v == doctest::Approx(0.25));

    std::vector<double> scores(y.size());
    std::vector<int32_t> labels(y.size());
    for (size_t i = 0; i < y.size(); ++i) {
      scores[i] = inclusion[i];
      labels[i] = (y[i] == 15) ? 1 : 0;
    }
    REQUIRE(star_metric_auc(scores.data(), labels.data(), y.size(), &v) == STAR_OK);
    CHECK(v > 0.95);

    REQUIRE(star_metric_ess(scores.data(), scores.size(), &v) == STAR_OK);
    CHECK(v > 0.0);
  }

  star_rng_free(rng);
  star_transform_free(ident);
}

TEST_CASE("command layer end to end") {
  const fs::path dir = fs::temp_directory_path() / "star_capi_cmd";
  fs::remove_all(dir);
  fs::create_directories(dir);

  REQUIRE(star_cmd_simulate("{\"kind\":\"rounded-sparse\",\"n\":50,\"mu\":3.0,"
                            "\"propSignal\":0.2}",
                            3, (dir / "sim").c_str()) == STAR_OK);
  CHECK(fs::exists(dir / "sim" / "data.csv"));

  REQUIRE(star_cmd_sparse_means(
              (dir / "sim" / "data.csv").c_str(),
              "{\"scheme\":{\"kind\":\"count-bounded\",\"yMin\":null,\"yMax\":null},"
              "\"sweeps\":200,\"burnin\":50}",
              4, (dir / "out").c_str()) == STAR_OK);
  CHECK(fs::exists(dir / "out" / "inclusion.csv"));
}
