#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>

#include "star/harness/commands.hpp"
#include "star/harness/csv.hpp"
#include "star/harness/data_gen.hpp"
#include "star/harness/study.hpp"

using namespace star;
using namespace star::harness;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("star_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("csv round trip and response split") {
  const fs::path dir = temp_dir("csv");
  write_csv(dir / "d.csv", {"y", "x1", "x2"},
            {{1, 0.5, -1.0}, {0, 0.25, 2.0}, {3, -0.75, 0.125}});
  const CsvTable t = read_csv(dir / "d.csv");
  CHECK(t.header.size() == 3);
  CHECK(t.rows() == 3);
  const Dataset d = split_response(t);
  CHECK(d.y[2] == 3);
  CHECK(d.X(1, 1) == doctest::Approx(2.0));
  CHECK(d.covariateNames[0] == "x1");

  SUBCASE("malformed input errors") {
    std::ofstream bad(dir / "bad.csv");
    bad << "y,x\n1,2\n3\n";
    bad.close();
    CHECK_THROWS(read_csv(dir / "bad.csv"));
    std::ofstream nonnum(dir / "nn.csv");
    nonnum << "y,x\n1,apple\n";
    nonnum.close();
    CHECK_THROWS(read_csv(dir / "nn.csv"));
  }
}

TEST_CASE("gen_negbin_regression") {
  SUBCASE("deterministic given the seed") {
    const auto a = gen_negbin_regression(50, 5, 42);
    const auto b = gen_negbin_regression(50, 5, 42);
    CHECK((a.X - b.X).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.y - b.y).cwiseAbs().maxCoeff() == 0);
  }
  SUBCASE("counts are nonnegative and overdispersed in most seeds") {
    int overdispersed = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto d = gen_negbin_regression(300, 4, seed);
      CHECK(d.y.minCoeff() >= 0);
      const double m = d.y.cast<double>().mean();
      const double v = (d.y.cast<double>().array() - m).square().sum() / (d.y.size() - 1);
      if (v > m) ++overdispersed;
    }
    CHECK(overdispersed >= 18);
  }
  SUBCASE("coefficient rule") {
    const auto d = gen_negbin_regression(30, 7, 3);
    int active = 0;
    for (int j = 0; j < 7; ++j)
      if (d.thetaTrue[j] != 0.0) ++active;
    CHECK(active == 4);  // ceil(7/2)
    CHECK(d.thetaTrue[0] == doctest::Approx(1.0 / std::sqrt(7.0)));
  }
}

TEST_CASE("nonlinear generators") {
  SUBCASE("bounded support") {
    const auto a = gen_nl_negbin(200, 7);
    CHECK(a.y.minCoeff() >= 0);
    CHECK(a.y.maxCoeff() <= 30);
    const auto b = gen_nl_mixture_cdf(200, 8);
    CHECK(b.y.minCoeff() >= 0);
    CHECK(b.y.maxCoeff() <= 30);
  }
  SUBCASE("seed determinism") {
    const auto a = gen_nl_mixture_cdf(100, 9);
    const auto b = gen_nl_mixture_cdf(100, 9);
    CHECK((a.y - b.y).cwiseAbs().maxCoeff() == 0);
  }
  SUBCASE("mixture marginal lifts the boundary frequencies") {
    // pool many replicates; compare boundary mass with a Poisson(10) model
    int boundary = 0, total = 0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
      const auto d = gen_nl_mixture_cdf(200, seed);
      for (Eigen::Index i = 0; i < d.y.size(); ++i) {
        boundary += (d.y[i] == 0 || d.y[i] == 30) ? 1 : 0;
        ++total;
      }
    }
    const double freq = static_cast<double>(boundary) / total;
    // Poisson(10) puts ~5e-5 mass on {0} u {30,...}; the mixture design puts
    // a quarter of its mass there
    CHECK(freq > 0.05);
  }
}

TEST_CASE("gen_rounded_sparse") {
  const auto d = gen_rounded_sparse(200, 2.0, 0.1, 5);
  CHECK(d.gammaTrue.sum() == 20);
  SUBCASE("null signal strength leaves marginals indistinguishable") {
    const auto d0 = gen_rounded_sparse(2000, 0.0, 0.5, 6);
    double m1 = 0.0, m0 = 0.0;
    int n1 = 0, n0 = 0;
    for (int i = 0; i < 2000; ++i) {
      if (d0.gammaTrue[i]) {
        m1 += d0.y[i];
        ++n1;
      } else {
        m0 += d0.y[i];
        ++n0;
      }
    }
    m1 /= n1;
    m0 /= n0;
    CHECK(std::abs(m1 - m0) < 3.0 * std::sqrt(1.0 / n1 + 1.0 / n0));
  }
  SUBCASE("determinism") {
    const auto a = gen_rounded_sparse(100, 2.0, 0.1, 7);
    const auto b = gen_rounded_sparse(100, 2.0, 0.1, 7);
    CHECK((a.y - b.y).cwiseAbs().maxCoeff() == 0);
    CHECK((a.gammaTrue - b.gammaTrue).cwiseAbs().maxCoeff() == 0);
  }
}

TEST_CASE("run_study: ess-benchmark schema") {
  ExperimentConfig cfg;
  cfg.study = "ess-benchmark";
  cfg.replicates = 2;
  cfg.seed = 11;
  cfg.nGrid = {60};
  cfg.pGrid = {5};
  cfg.draws = 300;
  cfg.gibbsBurnin = 200;
  const StudyResult res = run_study(cfg);
  std::set<std::string> methods, metrics;
  for (const auto& r : res.rows) {
    methods.insert(r.method);
    metrics.insert(r.metric);
    CHECK(r.n == 60);
    CHECK(r.p == 5);
  }
  CHECK(methods == std::set<std::string>{"direct-mc", "gibbs-da"});
  CHECK(metrics == std::set<std::string>{"ess-pct", "seconds-per-1000"});
  CHECK(res.rows.size() == 2 * 2 * 2);

  SUBCASE("writes results and summary") {
    const fs::path dir = temp_dir("study_ess");
    write_study(res, dir);
    CHECK(fs::exists(dir / "results.csv"));
    const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(summary.at("study") == "ess-benchmark");
    CHECK(summary.at("failures").empty());
  }
}

TEST_CASE("run_study: prediction-nl schema") {
  ExperimentConfig cfg;
  cfg.study = "prediction-nl";
  cfg.replicates = 1;
  cfg.seed = 12;
  cfg.nPoints = 60;
  cfg.predictiveDraws = 200;
  cfg.marginalSamples = 2000;
  cfg.basisKnots = 4;
  const StudyResult res = run_study(cfg);
  std::set<std::string> methods, metrics;
  for (const auto& r : res.rows) {
    methods.insert(r.method);
    metrics.insert(r.metric);
  }
  CHECK(methods.count("np-cdf") == 1);
  CHECK(methods.count("parametric-poisson") == 1);
  CHECK(methods.count("model-averaged") == 1);
  CHECK(metrics == std::set<std::string>{"rps", "interval-width", "coverage"});
  CHECK(res.rows.size() == 7 * 3);
}

TEST_CASE("run_study: sparse-means schema") {
  ExperimentConfig cfg;
  cfg.study = "sparse-means";
  cfg.replicates = 2;
  cfg.seed = 13;
  cfg.nSparse = 80;
  cfg.sweeps = 250;
  cfg.sparseBurnin = 50;
  const StudyResult res = run_study(cfg);
  std::set<std::string> methods;
  for (const auto& r : res.rows) methods.insert(r.method);
  CHECK(methods == std::set<std::string>{"np-cdf-rounding", "identity-rounding",
                                         "gaussian-no-rounding"});
  int aucRows = 0;
  for (const auto& r : res.rows)
    if (r.metric == "auc") {
      CHECK(r.value >= 0.0);
      CHECK(r.value <= 1.0);
      ++aucRows;
    }
  CHECK(aucRows == 6);
}

TEST_CASE("commands: fit, predict, select-model, sparse-means, simulate") {
  const fs::path dir = temp_dir("cmds");

  // build a small training set through the simulate command
  cmd_simulate(R"({"kind":"negbin-regression","n":60,"p":3})", 21,
               (dir / "sim").string());
  CHECK(fs::exists(dir / "sim" / "data.csv"));
  CHECK(fs::exists(dir / "sim" / "truth.csv"));

  SUBCASE("fit emits draws and diagnostics deterministically") {
    cmd_fit((dir / "sim" / "data.csv").string(), R"({"psi":100})", 5, 200,
            (dir / "fit1").string());
    cmd_fit((dir / "sim" / "data.csv").string(), R"({"psi":100})", 5, 200,
            (dir / "fit2").string());
    CHECK(slurp(dir / "fit1" / "draws.csv") == slurp(dir / "fit2" / "draws.csv"));
    const auto diag = nlohmann::json::parse(slurp(dir / "fit1" / "diagnostics.json"));
    CHECK(diag.at("sigma").get<double>() > 0.0);
    CHECK(diag.at("medianEssPct").get<double>() > 50.0);
  }
  SUBCASE("predict round trip stays in the support range") {
    // reuse the training covariates as the prediction design
    const CsvTable t = read_csv(dir / "sim" / "data.csv");
    std::vector<std::vector<double>> rows;
    for (std::size_t r = 0; r < 5; ++r)
      rows.push_back({t.columns[1][r], t.columns[2][r], t.columns[3][r]});
    write_csv(dir / "new.csv", {"x1", "x2", "x3"}, rows);
    cmd_predict((dir / "sim" / "data.csv").string(), (dir / "new.csv").string(),
                R"({"pmf":true,"support":[0,40],"nSamples":2000})", 6, 300,
                (dir / "pred").string());
    const CsvTable draws = read_csv(dir / "pred" / "predictive_draws.csv");
    CHECK(draws.header.size() == 5);
    for (const auto& col : draws.columns)
      for (double v : col) CHECK(v >= 0.0);
    CHECK(fs::exists(dir / "pred" / "pmf.csv"));
  }
  SUBCASE("select-model on identical candidates splits the weight evenly") {
    cmd_select_model(
        (dir / "sim" / "data.csv").string(),
        R"({"candidates":[{"transform":"np-cdf"},{"transform":"np-cdf"},{"transform":"np-cdf"}],
            "nSamples":4000})",
        7, (dir / "sel").string());
    const auto w = nlohmann::json::parse(slurp(dir / "sel" / "weights.json"));
    for (const auto& c : w.at("candidates"))
      CHECK(c.at("weight").get<double>() == doctest::Approx(1.0 / 3.0).epsilon(0.05));
  }
  SUBCASE("sparse-means command writes inclusion probabilities") {
    cmd_simulate(R"({"kind":"rounded-sparse","n":80,"mu":3.0,"propSignal":0.2})", 22,
                 (dir / "sparse").string());
    cmd_sparse_means((dir / "sparse" / "data.csv").string(),
                     R"({"scheme":{"kind":"count-bounded","yMin":null,"yMax":null},
                         "sweeps":300,"burnin":60})",
                     8, (dir / "sparseout").string());
    const CsvTable inc = read_csv(dir / "sparseout" / "inclusion.csv");
    CHECK(inc.rows() == 80);
    for (double v : inc.columns[1]) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  SUBCASE("study command writes the result files") {
    cmd_study(R"({"study":"sparse-means","replicates":1,"nSparse":60,"sweeps":200,
                  "sparseBurnin":40})",
              9, (dir / "study").string());
    CHECK(fs::exists(dir / "study" / "results.csv"));
    CHECK(fs::exists(dir / "study" / "summary.json"));
  }
  SUBCASE("structured errors for malformed input") {
    CHECK_THROWS(cmd_fit((dir / "missing.csv").string(), "{}", 1, 10, (dir / "x").string()));
    CHECK_THROWS(cmd_select_model((dir / "sim" / "data.csv").string(), "{}", 1,
                                  (dir / "x").string()));
  }
}
