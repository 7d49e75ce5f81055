#include "star/harness/commands.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "star/eval_metrics.hpp"
#include "star/harness/csv.hpp"
#include "star/harness/data_gen.hpp"
#include "star/harness/study.hpp"
#include "star/model_space.hpp"
#include "star/sparse_means.hpp"
#include "star/star_linear.hpp"

namespace star::harness {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json parse_config(const std::string& text) {
  if (text.empty()) return json::object();
  return json::parse(text);
}

double json_inf(const json& j, double fallback) {
  if (j.is_null()) return fallback;
  return j.get<double>();
}

discrete::RoundingScheme parse_scheme(const json& cfg, bool floorDefault = false) {
  const double inf = std::numeric_limits<double>::infinity();
  if (!cfg.contains("scheme"))
    return floorDefault ? discrete::RoundingScheme::floor_half()
                        : discrete::RoundingScheme::count_bounded(inf);
  const json& s = cfg.at("scheme");
  const std::string kind = s.value("kind", floorDefault ? "floor-half" : "count-bounded");
  if (kind == "floor-half") {
    const double lo = s.contains("yMin") ? json_inf(s.at("yMin"), -inf) : -inf;
    const double hi = s.contains("yMax") ? json_inf(s.at("yMax"), inf) : inf;
    return discrete::RoundingScheme::floor_half(lo, hi);
  }
  if (kind == "count-bounded") {
    const double lo = s.contains("yMin") ? json_inf(s.at("yMin"), -inf) : 0.0;
    const double hi = s.contains("yMax") ? json_inf(s.at("yMax"), inf) : inf;
    return discrete::RoundingScheme::count_bounded(hi, lo);
  }
  throw std::invalid_argument("unknown scheme kind '" + kind + "'");
}

discrete::Transformation parse_transform(const json& cfg, const Eigen::VectorXi& y,
                                         const discrete::RoundingScheme& scheme) {
  const std::string kind = cfg.value("transform", "np-cdf");
  if (kind == "identity") return discrete::Transformation::identity();
  if (kind == "box-cox") return discrete::Transformation::box_cox(cfg.value("lambda", 0.5));
  if (kind == "np-cdf") return discrete::fit_np_cdf(y, scheme);
  if (kind == "parametric-poisson")
    return discrete::fit_parametric(y, discrete::CountFamily::Poisson, scheme);
  if (kind == "parametric-negbin")
    return discrete::fit_parametric(y, discrete::CountFamily::NegBin, scheme);
  throw std::invalid_argument("unknown transform '" + kind + "'");
}

linear::StarLinearModel build_model(const Dataset& data, const json& cfg) {
  linear::StarLinearModel m;
  m.X = data.X;
  m.y = data.y;
  m.scheme = parse_scheme(cfg);
  m.transform = parse_transform(cfg, data.y, m.scheme);
  if (cfg.contains("sigma") && !cfg.at("sigma").is_null())
    m.sigma = cfg.at("sigma").get<double>();
  else
    m.sigma = linear::estimate_sigma(data.X, data.y, m.scheme, m.transform);
  m.prior = linear::GPrior{cfg.value("psi", 1000.0), Eigen::VectorXd()};
  return m;
}

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

std::vector<long> pmf_support(const linear::StarLinearModel& model, const json& cfg) {
  if (cfg.contains("support")) {
    const auto range = cfg.at("support").get<std::vector<long>>();
    if (range.size() != 2 || range[0] > range[1])
      throw std::invalid_argument("config support must be [lo, hi]");
    std::vector<long> s;
    for (long j = range[0]; j <= range[1]; ++j) s.push_back(j);
    return s;
  }
  return linear::default_support(model);
}

}  // namespace

void cmd_fit(const std::string& dataPath, const std::string& configText, std::uint64_t seed,
             std::size_t draws, const std::string& outDir) {
  const json cfg = parse_config(configText);
  const Dataset data = split_response(read_csv(dataPath));
  const linear::StarLinearModel model = build_model(data, cfg);
  fs::create_directories(outDir);

  Rng rng(seed);
  const auto t0 = std::chrono::steady_clock::now();
  const Eigen::MatrixXd thetas = linear::sample_posterior_gprior(model, draws, rng);
  const double seconds = std::chrono::duration<double>(
      std::chrono::steady_clock::now() - t0).count();

  std::vector<std::string> header;
  for (const auto& name : data.covariateNames) header.push_back("theta_" + name);
  std::vector<std::vector<double>> rows(thetas.rows(), std::vector<double>(thetas.cols()));
  for (Eigen::Index i = 0; i < thetas.rows(); ++i)
    for (Eigen::Index j = 0; j < thetas.cols(); ++j)
      rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = thetas(i, j);
  write_csv(fs::path(outDir) / "draws.csv", header, rows);

  Rng mlRng(derive_seed(seed, 1));
  const auto ml = linear::marginal_likelihood(
      model, static_cast<std::size_t>(cfg.value("nSamples", 20000)), mlRng);
  std::vector<double> essPct;
  for (Eigen::Index j = 0; j < thetas.cols(); ++j)
    essPct.push_back(100.0 * metrics::ess(thetas.col(j)).ess /
                     static_cast<double>(thetas.rows()));
  std::sort(essPct.begin(), essPct.end());

  json diag;
  diag["sigma"] = model.sigma;
  diag["psi"] = std::get<linear::GPrior>(model.prior).psi;
  diag["transform"] = model.transform.to_json();
  diag["logMarginalLikelihood"] = ml.logValue;
  diag["marginalRelErr"] = ml.relErr;
  diag["marginalUnderflow"] = ml.underflow;
  diag["medianEssPct"] = essPct[essPct.size() / 2];
  diag["seconds"] = seconds;
  diag["draws"] = draws;
  diag["seed"] = seed;
  Eigen::VectorXd mean = thetas.colwise().mean();
  diag["posteriorMean"] = std::vector<double>(mean.data(), mean.data() + mean.size());
  write_json(fs::path(outDir) / "diagnostics.json", diag);
}

void cmd_predict(const std::string& dataPath, const std::string& newDataPath,
                 const std::string& configText, std::uint64_t seed, std::size_t draws,
                 const std::string& outDir) {
  const json cfg = parse_config(configText);
  const Dataset data = split_response(read_csv(dataPath));
  const linear::StarLinearModel model = build_model(data, cfg);
  const Eigen::MatrixXd xnew = covariate_matrix(read_csv(newDataPath));
  if (xnew.cols() != model.p())
    throw std::invalid_argument("new covariate file has wrong column count");
  fs::create_directories(outDir);

  Rng rng(seed);
  const Eigen::MatrixXi ydraws = linear::predict_gprior(model, {xnew, draws}, rng);
  std::vector<std::string> header;
  for (Eigen::Index j = 0; j < xnew.rows(); ++j)
    header.push_back("ytilde_" + std::to_string(j + 1));
  std::vector<std::vector<double>> rows(ydraws.rows(), std::vector<double>(ydraws.cols()));
  for (Eigen::Index i = 0; i < ydraws.rows(); ++i)
    for (Eigen::Index j = 0; j < ydraws.cols(); ++j)
      rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = ydraws(i, j);
  write_csv(fs::path(outDir) / "predictive_draws.csv", header, rows);

  json diag;
  diag["sigma"] = model.sigma;
  diag["seed"] = seed;
  diag["draws"] = draws;
  if (cfg.value("pmf", false)) {
    const std::vector<long> support = pmf_support(model, cfg);
    const auto nSamples = static_cast<std::size_t>(cfg.value("nSamples", 20000));
    std::vector<std::vector<double>> pmfRows;
    json rawSums = json::array();
    Rng pmfRng(derive_seed(seed, 2));
    for (Eigen::Index r = 0; r < xnew.rows(); ++r) {
      const auto pmf = linear::predictive_pmf(model, xnew.row(r).transpose(), support,
                                              nSamples, pmfRng);
      for (std::size_t k = 0; k < pmf.support.size(); ++k)
        pmfRows.push_back({static_cast<double>(r + 1), static_cast<double>(pmf.support[k]),
                           pmf.probs[static_cast<Eigen::Index>(k)]});
      json rs;
      rs["row"] = r + 1;
      rs["rawSum"] = pmf.rawSum;
      rs["truncatedMass"] = std::max(0.0, 1.0 - pmf.rawSum);
      rs["relErr"] = pmf.relErr;
      rawSums.push_back(rs);
    }
    write_csv(fs::path(outDir) / "pmf.csv", {"row", "y", "prob"}, pmfRows);
    diag["pmf"] = rawSums;
  }
  write_json(fs::path(outDir) / "diagnostics.json", diag);
}

void cmd_select_model(const std::string& dataPath, const std::string& configText,
                      std::uint64_t seed, const std::string& outDir) {
  const json cfg = parse_config(configText);
  if (!cfg.contains("candidates") || !cfg.at("candidates").is_array() ||
      cfg.at("candidates").empty())
    throw std::invalid_argument("select-model config needs a nonempty 'candidates' array");
  const Dataset data = split_response(read_csv(dataPath));
  fs::create_directories(outDir);

  models::CandidateSet set;
  for (const auto& c : cfg.at("candidates")) {
    json merged = cfg;
    merged.merge_patch(c);
    merged.erase("candidates");
    set.candidates.push_back({build_model(data, merged), Eigen::MatrixXd()});
  }
  const auto k = static_cast<Eigen::Index>(set.candidates.size());
  if (cfg.contains("priorWeights")) {
    const auto w = cfg.at("priorWeights").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(w.size()) != k)
      throw std::invalid_argument("priorWeights length mismatch");
    set.priorWeights = Eigen::Map<const Eigen::VectorXd>(w.data(), k);
  } else {
    set.priorWeights = Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));
  }

  Rng rng(seed);
  const auto probs = models::posterior_model_probs(
      set, static_cast<std::size_t>(cfg.value("nSamples", 20000)), rng);

  json out;
  out["seed"] = seed;
  out["selected"] = probs.selected;
  out["closeCall"] = probs.closeCall;
  json entries = json::array();
  for (Eigen::Index i = 0; i < k; ++i) {
    json e;
    e["candidate"] = cfg.at("candidates")[static_cast<std::size_t>(i)];
    e["weight"] = probs.probs[i];
    e["logMarginalLikelihood"] = probs.logMargLik[i];
    e["relErr"] = probs.relErr[i];
    entries.push_back(e);
  }
  out["candidates"] = entries;
  write_json(fs::path(outDir) / "weights.json", out);
}

void cmd_sparse_means(const std::string& dataPath, const std::string& configText,
                      std::uint64_t seed, const std::string& outDir) {
  const json cfg = parse_config(configText);
  const CsvTable table = read_csv(dataPath);
  const int yi = table.column_index("y");
  if (yi < 0) throw std::runtime_error("sparse-means CSV needs a 'y' column");
  Eigen::VectorXi y(static_cast<Eigen::Index>(table.rows()));
  for (std::size_t r = 0; r < table.rows(); ++r)
    y[static_cast<Eigen::Index>(r)] =
        static_cast<int>(std::lround(table.columns[static_cast<std::size_t>(yi)][r]));
  fs::create_directories(outDir);

  sparse::SparseMeansConfig sc;
  sc.scheme = parse_scheme(cfg, /*floorDefault=*/true);
  sc.transform = parse_transform(cfg, y, sc.scheme);
  sc.gaussianLikelihood = cfg.value("gaussian", false);
  sc.aPi = cfg.value("aPi", 1.0);
  sc.bPi = cfg.value("bPi", 1.0);
  if (cfg.contains("psi") && !cfg.at("psi").is_null())
    sc.psiPrior = sparse::PsiPrior::fixed_at(cfg.at("psi").get<double>());
  else
    sc.psiPrior = sparse::PsiPrior::uniform_root();
  if (cfg.contains("sigma") && !cfg.at("sigma").is_null())
    sc.sigma = cfg.at("sigma").get<double>();
  else
    sc.sigma = sparse::estimate_sigma_2means(y, sc.scheme, sc.transform);

  const auto sweeps = static_cast<std::size_t>(cfg.value("sweeps", 1500));
  const auto burnin = static_cast<std::size_t>(cfg.value("burnin", 300));
  Rng rng(seed);
  const auto chain = sparse::run_chain(sc, y, sweeps, burnin, rng);

  const auto kept = static_cast<std::size_t>(chain.thetaDraws.rows());
  std::vector<std::vector<double>> rows;
  std::vector<double> col(kept);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    for (std::size_t s = 0; s < kept; ++s) col[s] = chain.thetaDraws(static_cast<Eigen::Index>(s), i);
    std::sort(col.begin(), col.end());
    const double lo = col[static_cast<std::size_t>(0.05 * (kept - 1))];
    const double hi = col[static_cast<std::size_t>(0.95 * (kept - 1))];
    const double mean = chain.thetaDraws.col(i).mean();
    rows.push_back({static_cast<double>(i + 1), chain.inclusionProbs[i], mean, lo, hi});
  }
  write_csv(fs::path(outDir) / "inclusion.csv",
            {"index", "inclusion_prob", "theta_mean", "theta_lo", "theta_hi"}, rows);

  double piMean = 0.0, psiMean = 0.0;
  for (const auto& s : chain.states) {
    piMean += s.pi;
    psiMean += s.psi;
  }
  json diag;
  diag["sigma"] = sc.sigma;
  diag["seed"] = seed;
  diag["sweeps"] = sweeps;
  diag["burnin"] = burnin;
  diag["piMean"] = piMean / static_cast<double>(chain.states.size());
  diag["psiMean"] = psiMean / static_cast<double>(chain.states.size());
  write_json(fs::path(outDir) / "diagnostics.json", diag);
}

void cmd_simulate(const std::string& configText, std::uint64_t seed, const std::string& outDir) {
  const json cfg = parse_config(configText);
  const std::string kind = cfg.value("kind", "negbin-regression");
  const int n = cfg.value("n", 200);
  fs::create_directories(outDir);

  SyntheticDataset data;
  std::vector<std::string> header{"y"};
  if (kind == "negbin-regression") {
    const int p = cfg.value("p", 10);
    data = gen_negbin_regression(n, p, seed);
    for (int j = 1; j <= p; ++j) header.push_back("x" + std::to_string(j));
  } else if (kind == "nl-negbin" || kind == "nl-mixture-cdf") {
    data = (kind == "nl-negbin") ? gen_nl_negbin(n, seed) : gen_nl_mixture_cdf(n, seed);
    header.push_back("tau");
  } else if (kind == "rounded-sparse") {
    data = gen_rounded_sparse(n, cfg.value("mu", 2.0), cfg.value("propSignal", 0.1), seed);
  } else {
    throw std::invalid_argument("unknown simulate kind '" + kind + "'");
  }

  std::vector<std::vector<double>> rows;
  for (Eigen::Index i = 0; i < data.y.size(); ++i) {
    std::vector<double> row{static_cast<double>(data.y[i])};
    for (Eigen::Index j = 0; j < data.X.cols(); ++j) row.push_back(data.X(i, j));
    rows.push_back(std::move(row));
  }
  write_csv(fs::path(outDir) / "data.csv", header, rows);

  std::vector<std::vector<double>> truthRows;
  std::vector<std::string> truthHeader;
  if (data.thetaTrue.size() > 0 && data.gammaTrue.size() == 0) {
    truthHeader = {"theta"};
    for (Eigen::Index i = 0; i < data.thetaTrue.size(); ++i)
      truthRows.push_back({data.thetaTrue[i]});
  } else if (data.gammaTrue.size() > 0) {
    truthHeader = {"theta", "gamma"};
    for (Eigen::Index i = 0; i < data.gammaTrue.size(); ++i)
      truthRows.push_back({data.thetaTrue[i], static_cast<double>(data.gammaTrue[i])});
  } else if (data.fTrue.size() > 0) {
    truthHeader = {"f_true"};
    for (Eigen::Index i = 0; i < data.fTrue.size(); ++i) truthRows.push_back({data.fTrue[i]});
  }
  if (!truthRows.empty()) write_csv(fs::path(outDir) / "truth.csv", truthHeader, truthRows);
}

void cmd_study(const std::string& configText, std::uint64_t seed, const std::string& outDir) {
  json cfg = parse_config(configText);
  if (!cfg.contains("study")) throw std::invalid_argument("study config needs a 'study' field");
  if (seed != 0) cfg["seed"] = seed;
  const ExperimentConfig config = ExperimentConfig::from_json(cfg);
  const StudyResult result = run_study(config);
  write_study(result, outDir);
}

}  // namespace star::harness
