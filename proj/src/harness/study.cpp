#include "star/harness/study.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "star/eval_metrics.hpp"
#include "star/harness/csv.hpp"
#include "star/harness/data_gen.hpp"
#include "star/model_space.hpp"
#include "star/nonlinear_basis.hpp"
#include "star/sparse_means.hpp"
#include "star/star_linear.hpp"

namespace star::harness {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return (v.size() % 2 == 1) ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// ---------------------------------------------------------------------------
// ess-benchmark: direct Monte Carlo vs data-augmentation Gibbs

void ess_benchmark_replicate(const ExperimentConfig& cfg, int rep, int n, int p,
                             std::vector<StudyRow>& rows) {
  const std::uint64_t seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(rep) * 1000003ULL +
                                                      static_cast<std::uint64_t>(n) * 131ULL +
                                                      static_cast<std::uint64_t>(p));
  const SyntheticDataset data = gen_negbin_regression(n, p, seed);
  const auto scheme = discrete::RoundingScheme::count_bounded(
      std::numeric_limits<double>::infinity());
  const auto transform = discrete::fit_np_cdf(data.y, scheme);

  // fit with an intercept so the latent scale of the transformation is
  // reachable by the regression surface
  Eigen::MatrixXd design(n, p + 1);
  design.col(0).setOnes();
  design.rightCols(p) = data.X;

  linear::StarLinearModel model;
  model.X = design;
  model.y = data.y;
  model.scheme = scheme;
  model.transform = transform;
  model.sigma = linear::estimate_sigma(design, data.y, scheme, transform);
  model.prior = linear::GPrior{cfg.psi, Eigen::VectorXd()};

  const auto draws = static_cast<std::size_t>(cfg.draws);
  Rng rngDirect(derive_seed(seed, 1)), rngGibbs(derive_seed(seed, 2));

  auto t0 = Clock::now();
  const Eigen::MatrixXd direct = linear::sample_posterior_gprior(model, draws, rngDirect);
  const double directSec = seconds_since(t0) * 1000.0 / static_cast<double>(cfg.draws);

  t0 = Clock::now();
  const Eigen::MatrixXd chain =
      linear::gibbs_da_baseline(model, draws, static_cast<std::size_t>(cfg.gibbsBurnin), rngGibbs);
  const double gibbsSec = seconds_since(t0) * 1000.0 / static_cast<double>(cfg.draws);

  auto median_ess_pct = [&](const Eigen::MatrixXd& sample) {
    std::vector<double> essPct;
    for (Eigen::Index j = 0; j < sample.cols(); ++j)
      essPct.push_back(100.0 * metrics::ess(sample.col(j)).ess /
                       static_cast<double>(sample.rows()));
    return median(std::move(essPct));
  };

  rows.push_back({rep, n, p, "direct-mc", "ess-pct", median_ess_pct(direct)});
  rows.push_back({rep, n, p, "direct-mc", "seconds-per-1000", directSec});
  rows.push_back({rep, n, p, "gibbs-da", "ess-pct", median_ess_pct(chain)});
  rows.push_back({rep, n, p, "gibbs-da", "seconds-per-1000", gibbsSec});
}

// ---------------------------------------------------------------------------
// prediction-nl: transformation candidates and model averaging

struct NamedTransform {
  std::string name;
  discrete::Transformation transform;
};

std::vector<NamedTransform> candidate_transforms(const Eigen::VectorXi& y,
                                                 const discrete::RoundingScheme& scheme) {
  std::vector<NamedTransform> out;
  out.push_back({"identity", discrete::Transformation::identity()});
  out.push_back({"box-cox-0.5", discrete::Transformation::box_cox(0.5)});
  out.push_back({"box-cox-0", discrete::Transformation::box_cox(0.0)});
  out.push_back({"np-cdf", discrete::fit_np_cdf(y, scheme)});
  out.push_back({"parametric-poisson",
                 discrete::fit_parametric(y, discrete::CountFamily::Poisson, scheme)});
  out.push_back({"parametric-negbin",
                 discrete::fit_parametric(y, discrete::CountFamily::NegBin, scheme)});
  return out;
}

void prediction_nl_replicate(const ExperimentConfig& cfg, int rep, std::vector<StudyRow>& rows) {
  const std::uint64_t seed = derive_seed(cfg.seed, 7700000ULL + static_cast<std::uint64_t>(rep));
  const SyntheticDataset data = (cfg.dgp == "neg-bin") ? gen_nl_negbin(cfg.nPoints, seed)
                                                       : gen_nl_mixture_cdf(cfg.nPoints, seed);
  const auto scheme = discrete::RoundingScheme::count_bounded(30.0);

  // out-of-sample split: every fifth grid point is held out
  std::vector<int> trainIdx, testIdx;
  for (int i = 0; i < cfg.nPoints; ++i) (i % 5 == 2 ? testIdx : trainIdx).push_back(i);
  Eigen::VectorXd tauTrain(trainIdx.size()), tauTest(testIdx.size());
  Eigen::VectorXi yTrain(trainIdx.size()), yTest(testIdx.size());
  for (std::size_t i = 0; i < trainIdx.size(); ++i) {
    tauTrain[static_cast<Eigen::Index>(i)] = data.X(trainIdx[i], 0);
    yTrain[static_cast<Eigen::Index>(i)] = data.y[trainIdx[i]];
  }
  for (std::size_t i = 0; i < testIdx.size(); ++i) {
    tauTest[static_cast<Eigen::Index>(i)] = data.X(testIdx[i], 0);
    yTest[static_cast<Eigen::Index>(i)] = data.y[testIdx[i]];
  }

  const auto spec = basis::BasisSpec::bspline(3, cfg.basisKnots);
  const auto diag = basis::build_diagonalized(spec, tauTrain);
  const Eigen::MatrixXd xTest = diag.at(tauTest);

  models::CandidateSet set;
  const auto cands = candidate_transforms(yTrain, scheme);
  for (const auto& cand : cands) {
    linear::StarLinearModel m;
    m.X = diag.X;
    m.y = yTrain;
    m.scheme = scheme;
    m.transform = cand.transform;
    m.sigma = linear::estimate_sigma(diag.X, yTrain, scheme, cand.transform);
    m.prior = linear::GeneralPrior{
        Eigen::VectorXd::Zero(diag.p()),
        cfg.psi * m.sigma * m.sigma * Eigen::MatrixXd::Identity(diag.p(), diag.p())};
    set.candidates.push_back({std::move(m), xTest});
  }
  set.priorWeights = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(cands.size()),
                                               1.0 / static_cast<double>(cands.size()));

  const auto count = static_cast<std::size_t>(cfg.predictiveDraws);
  auto score = [&](const std::string& name, const Eigen::MatrixXi& draws) {
    // per-point empirical pmfs over the bounded support
    double rpsSum = 0.0;
    for (Eigen::Index j = 0; j < draws.cols(); ++j) {
      metrics::DiscreteForecast f;
      Eigen::VectorXd probs = Eigen::VectorXd::Zero(31);
      for (Eigen::Index i = 0; i < draws.rows(); ++i) probs[draws(i, j)] += 1.0;
      probs /= static_cast<double>(draws.rows());
      for (long v = 0; v <= 30; ++v) f.support.push_back(v);
      f.probs = probs;
      rpsSum += metrics::rps(f, yTest[j]);
    }
    const auto im = metrics::interval_metrics(draws, yTest, 0.9);
    rows.push_back({rep, cfg.nPoints, static_cast<int>(diag.p()), name, "rps",
                    rpsSum / static_cast<double>(draws.cols())});
    rows.push_back({rep, cfg.nPoints, static_cast<int>(diag.p()), name, "interval-width",
                    im.meanWidth});
    rows.push_back({rep, cfg.nPoints, static_cast<int>(diag.p()), name, "coverage", im.coverage});
  };

  for (std::size_t k = 0; k < set.candidates.size(); ++k) {
    Rng rng(derive_seed(seed, 100 + k));
    const Eigen::MatrixXi draws =
        linear::predict_via_posterior(set.candidates[k].model, {xTest, count}, rng);
    score(cands[k].name, draws);
  }
  {
    Rng rng(derive_seed(seed, 999));
    const auto avg = models::model_averaged_predict(
        set, {xTest, count}, static_cast<std::size_t>(cfg.marginalSamples), rng);
    score("model-averaged", avg.draws);
  }
}

// ---------------------------------------------------------------------------
// sparse-means: selection ability with and without rounding

void sparse_means_replicate(const ExperimentConfig& cfg, int rep, std::vector<StudyRow>& rows) {
  const std::uint64_t seed = derive_seed(cfg.seed, 8800000ULL + static_cast<std::uint64_t>(rep));
  const SyntheticDataset data = gen_rounded_sparse(cfg.nSparse, cfg.mu, cfg.propSignal, seed);
  // floor partition A_j = [j, j+1) matches the generator y = floor(z)
  const auto scheme = discrete::RoundingScheme::count_bounded(
      std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity());

  struct Method {
    std::string name;
    discrete::Transformation transform;
    bool gaussian;
  };
  std::vector<Method> methods;
  methods.push_back({"np-cdf-rounding", discrete::fit_np_cdf(data.y, scheme), false});
  methods.push_back({"identity-rounding", discrete::Transformation::identity(), false});
  methods.push_back({"gaussian-no-rounding", discrete::Transformation::identity(), true});

  std::vector<int> labels(data.gammaTrue.data(), data.gammaTrue.data() + data.gammaTrue.size());
  for (std::size_t k = 0; k < methods.size(); ++k) {
    sparse::SparseMeansConfig sc;
    sc.scheme = scheme;
    sc.transform = methods[k].transform;
    sc.gaussianLikelihood = methods[k].gaussian;
    sc.sigma = sparse::estimate_sigma_2means(data.y, scheme, methods[k].transform);
    sc.aPi = 1.0;
    sc.bPi = 1.0;
    sc.psiPrior = sparse::PsiPrior::uniform_root();

    Rng rng(derive_seed(seed, 10 + k));
    const auto t0 = Clock::now();
    const auto chain = sparse::run_chain(sc, data.y, static_cast<std::size_t>(cfg.sweeps),
                                         static_cast<std::size_t>(cfg.sparseBurnin), rng);
    const double sec = seconds_since(t0);
    const auto roc = metrics::roc_auc(chain.inclusionProbs, labels);
    rows.push_back({rep, cfg.nSparse, -1, methods[k].name, "auc", roc.auc});
    rows.push_back({rep, cfg.nSparse, -1, methods[k].name, "seconds", sec});
  }
}

// ---------------------------------------------------------------------------

void sort_rows(std::vector<StudyRow>& rows) {
  std::sort(rows.begin(), rows.end(), [](const StudyRow& a, const StudyRow& b) {
    return std::tie(a.n, a.p, a.replicate, a.method, a.metric) <
           std::tie(b.n, b.p, b.replicate, b.method, b.metric);
  });
}

void run_parallel(int jobs, int threads, const std::function<void(int)>& work) {
  if (threads <= 0)
    threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, jobs);
  std::vector<std::thread> pool;
  std::mutex mu;
  int next = 0;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&]() {
      while (true) {
        int job;
        {
          std::lock_guard<std::mutex> lock(mu);
          if (next >= jobs) return;
          job = next++;
        }
        work(job);
      }
    });
  }
  for (auto& th : pool) th.join();
}

nlohmann::json summarize(const std::vector<StudyRow>& rows) {
  // aggregate by (n, p, method, metric)
  std::map<std::tuple<int, int, std::string, std::string>, std::vector<double>> groups;
  for (const auto& r : rows) groups[{r.n, r.p, r.method, r.metric}].push_back(r.value);
  nlohmann::json out = nlohmann::json::array();
  for (auto& [key, values] : groups) {
    nlohmann::json g;
    g["n"] = std::get<0>(key);
    g["p"] = std::get<1>(key);
    g["method"] = std::get<2>(key);
    g["metric"] = std::get<3>(key);
    g["count"] = values.size();
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    g["mean"] = mean;
    g["median"] = median(values);
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.study = j.at("study").get<std::string>();
  c.replicates = j.value("replicates", c.replicates);
  c.seed = j.value("seed", c.seed);
  c.threads = j.value("threads", c.threads);
  if (j.contains("nGrid")) c.nGrid = j.at("nGrid").get<std::vector<int>>();
  if (j.contains("pGrid")) c.pGrid = j.at("pGrid").get<std::vector<int>>();
  c.draws = j.value("draws", c.draws);
  c.gibbsBurnin = j.value("gibbsBurnin", c.gibbsBurnin);
  c.dgp = j.value("dgp", c.dgp);
  c.nPoints = j.value("nPoints", c.nPoints);
  c.predictiveDraws = j.value("predictiveDraws", c.predictiveDraws);
  c.marginalSamples = j.value("marginalSamples", c.marginalSamples);
  c.basisKnots = j.value("basisKnots", c.basisKnots);
  c.psi = j.value("psi", c.psi);
  c.nSparse = j.value("nSparse", c.nSparse);
  c.mu = j.value("mu", c.mu);
  c.propSignal = j.value("propSignal", c.propSignal);
  c.sweeps = j.value("sweeps", c.sweeps);
  c.sparseBurnin = j.value("sparseBurnin", c.sparseBurnin);
  if (c.replicates < 1) throw std::invalid_argument("ExperimentConfig: replicates must be >= 1");
  if (c.study == "ess-benchmark" && (c.nGrid.empty() || c.pGrid.empty()))
    throw std::invalid_argument("ExperimentConfig: empty grid");
  return c;
}

StudyResult run_study(const ExperimentConfig& config) {
  StudyResult result;
  std::mutex rowMutex;
  std::vector<std::string> failures;

  auto collect = [&](std::vector<StudyRow>&& rows) {
    std::lock_guard<std::mutex> lock(rowMutex);
    for (auto& r : rows) result.rows.push_back(std::move(r));
  };
  auto record_failure = [&](int job, const std::exception& e) {
    // a failed replicate is recorded and the study continues
    std::lock_guard<std::mutex> lock(rowMutex);
    failures.push_back("replicate job " + std::to_string(job) + ": " + e.what());
  };

  if (config.study == "ess-benchmark") {
    struct Job {
      int rep, n, p;
    };
    std::vector<Job> jobs;
    for (int n : config.nGrid)
      for (int p : config.pGrid)
        for (int rep = 0; rep < config.replicates; ++rep) jobs.push_back({rep, n, p});
    run_parallel(static_cast<int>(jobs.size()), config.threads, [&](int i) {
      std::vector<StudyRow> rows;
      try {
        ess_benchmark_replicate(config, jobs[static_cast<std::size_t>(i)].rep,
                                jobs[static_cast<std::size_t>(i)].n,
                                jobs[static_cast<std::size_t>(i)].p, rows);
      } catch (const std::exception& e) {
        record_failure(i, e);
        return;
      }
      collect(std::move(rows));
    });
  } else if (config.study == "prediction-nl") {
    run_parallel(config.replicates, config.threads, [&](int rep) {
      std::vector<StudyRow> rows;
      try {
        prediction_nl_replicate(config, rep, rows);
      } catch (const std::exception& e) {
        record_failure(rep, e);
        return;
      }
      collect(std::move(rows));
    });
  } else if (config.study == "sparse-means") {
    run_parallel(config.replicates, config.threads, [&](int rep) {
      std::vector<StudyRow> rows;
      try {
        sparse_means_replicate(config, rep, rows);
      } catch (const std::exception& e) {
        record_failure(rep, e);
        return;
      }
      collect(std::move(rows));
    });
  } else {
    throw std::invalid_argument("run_study: unknown study '" + config.study + "'");
  }

  sort_rows(result.rows);
  nlohmann::json summary;
  summary["study"] = config.study;
  summary["replicates"] = config.replicates;
  summary["seed"] = config.seed;
  summary["groups"] = summarize(result.rows);
  summary["failures"] = failures;
  if (config.study == "ess-benchmark")
    summary["coefficientRule"] =
        "ceil(p/2) leading coefficients at 1/sqrt(p), intercept log(10), dispersion 5";
  result.summaryJson = summary.dump(2);
  return result;
}

void write_study(const StudyResult& result, const std::filesystem::path& outDir) {
  std::filesystem::create_directories(outDir);
  std::ofstream csv(outDir / "results.csv");
  if (!csv) throw IoError("cannot write results.csv");
  csv << "replicate,n,p,method,metric,value\n";
  csv.precision(10);
  for (const auto& r : result.rows)
    csv << r.replicate << ',' << r.n << ',' << r.p << ',' << r.method << ',' << r.metric << ','
        << r.value << '\n';
  std::ofstream js(outDir / "summary.json");
  if (!js) throw IoError("cannot write summary.json");
  js << result.summaryJson << '\n';
}

}  // namespace star::harness
