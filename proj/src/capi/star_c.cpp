#include "star/star_c.h"

#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "star/eval_metrics.hpp"
#include "star/harness/commands.hpp"
#include "star/harness/csv.hpp"
#include "star/model_space.hpp"
#include "star/sparse_means.hpp"
#include "star/star_linear.hpp"

namespace {

thread_local std::string g_lastError;

void set_error(const std::string& msg) { g_lastError = msg; }

template <typename Fn>
star_status guarded(Fn&& fn) {
  try {
    fn();
    return STAR_OK;
  } catch (const std::invalid_argument& e) {
    set_error(e.what());
    return STAR_ERR_INVALID;
  } catch (const std::domain_error& e) {
    set_error(e.what());
    return STAR_ERR_INVALID;
  } catch (const star::harness::IoError& e) {
    set_error(e.what());
    return STAR_ERR_IO;
  } catch (const std::filesystem::filesystem_error& e) {
    set_error(e.what());
    return STAR_ERR_IO;
  } catch (const std::runtime_error& e) {
    set_error(e.what());
    return STAR_ERR_NUMERIC;
  } catch (const std::exception& e) {
    set_error(e.what());
    return STAR_ERR_UNKNOWN;
  }
}

template <typename Fn>
auto guarded_ptr(Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const std::exception& e) {
    set_error(e.what());
    return nullptr;
  }
}

star::discrete::RoundingScheme to_scheme(star_scheme s) {
  if (s.kind == STAR_SCHEME_FLOOR_HALF)
    return star::discrete::RoundingScheme::floor_half(s.y_min, s.y_max);
  if (s.kind == STAR_SCHEME_COUNT_BOUNDED)
    return star::discrete::RoundingScheme::count_bounded(s.y_max, s.y_min);
  throw std::invalid_argument("star_scheme: unknown kind");
}

Eigen::VectorXi to_counts(const int32_t* y, size_t n) {
  if (y == nullptr || n == 0) throw std::invalid_argument("null or empty response");
  Eigen::VectorXi out(static_cast<Eigen::Index>(n));
  for (size_t i = 0; i < n; ++i) out[static_cast<Eigen::Index>(i)] = y[i];
  return out;
}

std::string text_or_empty(const char* s) { return s == nullptr ? std::string() : std::string(s); }

}  // namespace

struct star_rng {
  star::Rng rng;
};

struct star_transform {
  star::discrete::Transformation t;
};

struct star_model {
  star::linear::StarLinearModel m;
};

extern "C" {

const char* star_last_error(void) { return g_lastError.c_str(); }

star_rng* star_rng_new(uint64_t seed) { return new star_rng{star::Rng(seed)}; }

void star_rng_free(star_rng* rng) { delete rng; }

star_transform* star_transform_identity(void) {
  return new star_transform{star::discrete::Transformation::identity()};
}

star_transform* star_transform_box_cox(double lambda) {
  return guarded_ptr([&]() -> star_transform* {
    return new star_transform{star::discrete::Transformation::box_cox(lambda)};
  });
}

star_transform* star_transform_fit(const int32_t* y, size_t n, int family, star_scheme scheme) {
  return guarded_ptr([&]() -> star_transform* {
    const Eigen::VectorXi counts = to_counts(y, n);
    const auto s = to_scheme(scheme);
    star::discrete::Transformation t;
    if (family == STAR_TRANSFORM_NP_CDF) {
      t = star::discrete::fit_np_cdf(counts, s);
    } else if (family == STAR_TRANSFORM_POISSON) {
      t = star::discrete::fit_parametric(counts, star::discrete::CountFamily::Poisson, s);
    } else if (family == STAR_TRANSFORM_NEGBIN) {
      t = star::discrete::fit_parametric(counts, star::discrete::CountFamily::NegBin, s);
    } else {
      throw std::invalid_argument("star_transform_fit: unknown family");
    }
    return new star_transform{std::move(t)};
  });
}

star_transform* star_transform_from_json(const char* json_text) {
  return guarded_ptr([&]() -> star_transform* {
    if (json_text == nullptr) throw std::invalid_argument("null JSON text");
    return new star_transform{star::discrete::Transformation::from_json_string(json_text)};
  });
}

char* star_transform_to_json(const star_transform* t) {
  return guarded_ptr([&]() -> char* {
    if (t == nullptr) throw std::invalid_argument("null transform");
    const std::string text = t->t.to_json_string();
    char* out = new char[text.size() + 1];
    std::memcpy(out, text.c_str(), text.size() + 1);
    return out;
  });
}

star_status star_transform_eval(const star_transform* t, double x, double* out) {
  return guarded([&]() {
    if (t == nullptr || out == nullptr) throw std::invalid_argument("null argument");
    *out = t->t.eval(x);
  });
}

star_status star_transform_inverse(const star_transform* t, double z, double* out) {
  return guarded([&]() {
    if (t == nullptr || out == nullptr) throw std::invalid_argument("null argument");
    *out = t->t.inverse(z);
  });
}

void star_transform_free(star_transform* t) { delete t; }

void star_string_free(char* s) { delete[] s; }

star_model* star_model_new(const double* x, size_t n, size_t p, const int32_t* y,
                           star_scheme scheme, const star_transform* g, double psi,
                           double sigma) {
  return guarded_ptr([&]() -> star_model* {
    if (x == nullptr || g == nullptr) throw std::invalid_argument("null argument");
    star::linear::StarLinearModel m;
    m.X = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                         Eigen::RowMajor>>(
        x, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    m.y = to_counts(y, n);
    m.scheme = to_scheme(scheme);
    m.transform = g->t;
    m.prior = star::linear::GPrior{psi, Eigen::VectorXd()};
    m.sigma = (sigma > 0.0)
                  ? sigma
                  : star::linear::estimate_sigma(m.X, m.y, m.scheme, m.transform);
    star::linear::validate_model(m);
    return new star_model{std::move(m)};
  });
}

void star_model_free(star_model* m) { delete m; }

double star_model_sigma(const star_model* m) { return m == nullptr ? -1.0 : m->m.sigma; }

star_status star_model_sample_posterior(const star_model* m, size_t count, star_rng* rng,
                                        double* out) {
  return guarded([&]() {
    if (m == nullptr || rng == nullptr || out == nullptr)
      throw std::invalid_argument("null argument");
    const Eigen::MatrixXd draws = star::linear::sample_posterior_gprior(m->m, count, rng->rng);
    for (Eigen::Index i = 0; i < draws.rows(); ++i)
      for (Eigen::Index j = 0; j < draws.cols(); ++j)
        out[static_cast<size_t>(i) * static_cast<size_t>(draws.cols()) +
            static_cast<size_t>(j)] = draws(i, j);
  });
}

star_status star_model_posterior_mean(const star_model* m, size_t nsamples, star_rng* rng,
                                      double* out) {
  return guarded([&]() {
    if (m == nullptr || rng == nullptr || out == nullptr)
      throw std::invalid_argument("null argument");
    const Eigen::VectorXd mean = star::linear::posterior_mean_gprior(m->m, nsamples, rng->rng);
    for (Eigen::Index j = 0; j < mean.size(); ++j) out[static_cast<size_t>(j)] = mean[j];
  });
}

star_status star_model_predict(const star_model* m, const double* xt, size_t nt, size_t count,
                               star_rng* rng, int32_t* out) {
  return guarded([&]() {
    if (m == nullptr || xt == nullptr || rng == nullptr || out == nullptr)
      throw std::invalid_argument("null argument");
    star::linear::PredictiveRequest req;
    req.xtilde = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                Eigen::RowMajor>>(
        xt, static_cast<Eigen::Index>(nt), m->m.p());
    req.count = count;
    const Eigen::MatrixXi draws = star::linear::predict_gprior(m->m, req, rng->rng);
    for (Eigen::Index i = 0; i < draws.rows(); ++i)
      for (Eigen::Index j = 0; j < draws.cols(); ++j)
        out[static_cast<size_t>(i) * nt + static_cast<size_t>(j)] = draws(i, j);
  });
}

star_status star_model_predictive_pmf(const star_model* m, const double* xt,
                                      const int64_t* support, size_t m_support, size_t nsamples,
                                      star_rng* rng, double* probs, double* raw_sum) {
  return guarded([&]() {
    if (m == nullptr || xt == nullptr || support == nullptr || rng == nullptr ||
        probs == nullptr)
      throw std::invalid_argument("null argument");
    const Eigen::VectorXd row =
        Eigen::Map<const Eigen::VectorXd>(xt, m->m.p());
    std::vector<long> sup(support, support + m_support);
    const auto pmf = star::linear::predictive_pmf(m->m, row, sup, nsamples, rng->rng);
    for (size_t k = 0; k < m_support; ++k) probs[k] = pmf.probs[static_cast<Eigen::Index>(k)];
    if (raw_sum != nullptr) *raw_sum = pmf.rawSum;
  });
}

star_status star_model_marginal_loglik(const star_model* m, size_t nsamples, star_rng* rng,
                                       double* logml, double* relerr) {
  return guarded([&]() {
    if (m == nullptr || rng == nullptr || logml == nullptr)
      throw std::invalid_argument("null argument");
    const auto ml = star::linear::marginal_likelihood(m->m, nsamples, rng->rng);
    *logml = ml.logValue;
    if (relerr != nullptr) *relerr = ml.relErr;
  });
}

star_status star_model_gibbs_da(const star_model* m, size_t count, size_t burnin, star_rng* rng,
                                double* out) {
  return guarded([&]() {
    if (m == nullptr || rng == nullptr || out == nullptr)
      throw std::invalid_argument("null argument");
    const Eigen::MatrixXd draws = star::linear::gibbs_da_baseline(m->m, count, burnin, rng->rng);
    for (Eigen::Index i = 0; i < draws.rows(); ++i)
      for (Eigen::Index j = 0; j < draws.cols(); ++j)
        out[static_cast<size_t>(i) * static_cast<size_t>(draws.cols()) +
            static_cast<size_t>(j)] = draws(i, j);
  });
}

star_status star_model_probs(const star_model* const* models, size_t k,
                             const double* prior_weights, size_t nsamples, star_rng* rng,
                             double* weights_out) {
  return guarded([&]() {
    if (models == nullptr || rng == nullptr || weights_out == nullptr || k == 0)
      throw std::invalid_argument("null argument");
    star::models::CandidateSet set;
    for (size_t i = 0; i < k; ++i) {
      if (models[i] == nullptr) throw std::invalid_argument("null model handle");
      set.candidates.push_back({models[i]->m, Eigen::MatrixXd()});
    }
    set.priorWeights.resize(static_cast<Eigen::Index>(k));
    for (size_t i = 0; i < k; ++i)
      set.priorWeights[static_cast<Eigen::Index>(i)] =
          prior_weights ? prior_weights[i] : 1.0 / static_cast<double>(k);
    const auto probs = star::models::posterior_model_probs(set, nsamples, rng->rng);
    for (size_t i = 0; i < k; ++i) weights_out[i] = probs.probs[static_cast<Eigen::Index>(i)];
  });
}

star_status star_sparse_means_run(const int32_t* y, size_t n, star_scheme scheme,
                                  const star_transform* g, double sigma, double a_pi,
                                  double b_pi, double psi, int gaussian, size_t sweeps,
                                  size_t burnin, star_rng* rng, double* inclusion,
                                  double* theta_mean) {
  return guarded([&]() {
    if (g == nullptr || rng == nullptr || inclusion == nullptr)
      throw std::invalid_argument("null argument");
    const Eigen::VectorXi counts = to_counts(y, n);
    star::sparse::SparseMeansConfig cfg;
    cfg.scheme = to_scheme(scheme);
    cfg.transform = g->t;
    cfg.gaussianLikelihood = gaussian != 0;
    cfg.aPi = a_pi;
    cfg.bPi = b_pi;
    cfg.psiPrior = (psi > 0.0) ? star::sparse::PsiPrior::fixed_at(psi)
                               : star::sparse::PsiPrior::uniform_root();
    cfg.sigma = (sigma > 0.0)
                    ? sigma
                    : star::sparse::estimate_sigma_2means(counts, cfg.scheme, cfg.transform);
    const auto chain = star::sparse::run_chain(cfg, counts, sweeps, burnin, rng->rng);
    for (size_t i = 0; i < n; ++i)
      inclusion[i] = chain.inclusionProbs[static_cast<Eigen::Index>(i)];
    if (theta_mean != nullptr) {
      const Eigen::VectorXd mean = chain.thetaDraws.colwise().mean();
      for (size_t i = 0; i < n; ++i) theta_mean[i] = mean[static_cast<Eigen::Index>(i)];
    }
  });
}

star_status star_metric_rps(const int64_t* support, const double* probs, size_t m,
                            int64_t observed, double* out) {
  return guarded([&]() {
    if (support == nullptr || probs == nullptr || out == nullptr)
      throw std::invalid_argument("null argument");
    star::metrics::DiscreteForecast f;
    f.support.assign(support, support + m);
    f.probs = Eigen::Map<const Eigen::VectorXd>(probs, static_cast<Eigen::Index>(m));
    *out = star::metrics::rps(f, observed);
  });
}

star_status star_metric_ess(const double* chain, size_t n, double* out) {
  return guarded([&]() {
    if (chain == nullptr || out == nullptr) throw std::invalid_argument("null argument");
    *out = star::metrics::ess(Eigen::Map<const Eigen::VectorXd>(
                                  chain, static_cast<Eigen::Index>(n)))
               .ess;
  });
}

star_status star_metric_auc(const double* scores, const int32_t* labels, size_t n, double* out) {
  return guarded([&]() {
    if (scores == nullptr || labels == nullptr || out == nullptr)
      throw std::invalid_argument("null argument");
    std::vector<int> lab(labels, labels + n);
    *out = star::metrics::roc_auc(
               Eigen::Map<const Eigen::VectorXd>(scores, static_cast<Eigen::Index>(n)), lab)
               .auc;
  });
}

star_status star_cmd_fit(const char* data_csv, const char* config_json, uint64_t seed,
                         size_t draws, const char* out_dir) {
  return guarded([&]() {
    if (data_csv == nullptr || out_dir == nullptr) throw std::invalid_argument("null path");
    star::harness::cmd_fit(data_csv, text_or_empty(config_json), seed, draws, out_dir);
  });
}

star_status star_cmd_predict(const char* data_csv, const char* new_csv, const char* config_json,
                             uint64_t seed, size_t draws, const char* out_dir) {
  return guarded([&]() {
    if (data_csv == nullptr || new_csv == nullptr || out_dir == nullptr)
      throw std::invalid_argument("null path");
    star::harness::cmd_predict(data_csv, new_csv, text_or_empty(config_json), seed, draws,
                               out_dir);
  });
}

star_status star_cmd_select_model(const char* data_csv, const char* config_json, uint64_t seed,
                                  const char* out_dir) {
  return guarded([&]() {
    if (data_csv == nullptr || out_dir == nullptr) throw std::invalid_argument("null path");
    star::harness::cmd_select_model(data_csv, text_or_empty(config_json), seed, out_dir);
  });
}

star_status star_cmd_sparse_means(const char* data_csv, const char* config_json, uint64_t seed,
                                  const char* out_dir) {
  return guarded([&]() {
    if (data_csv == nullptr || out_dir == nullptr) throw std::invalid_argument("null path");
    star::harness::cmd_sparse_means(data_csv, text_or_empty(config_json), seed, out_dir);
  });
}

star_status star_cmd_simulate(const char* config_json, uint64_t seed, const char* out_dir) {
  return guarded([&]() {
    if (out_dir == nullptr) throw std::invalid_argument("null path");
    star::harness::cmd_simulate(text_or_empty(config_json), seed, out_dir);
  });
}

star_status star_cmd_study(const char* config_json, uint64_t seed, const char* out_dir) {
  return guarded([&]() {
    if (out_dir == nullptr) throw std::invalid_argument("null path");
    star::harness::cmd_study(text_or_empty(config_json), seed, out_dir);
  });
}

}  // extern "C"
