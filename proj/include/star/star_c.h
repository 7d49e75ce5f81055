#ifndef STAR_C_H
#define STAR_C_H

/*
 * C interface to the STAR regression library: conjugate Bayesian inference
 * for count and rounded-data regression through selection-normal posteriors.
 *
 * All objects are opaque handles created and destroyed through this API.
 * Functions returning star_status report failures through the code and
 * leave a human-readable message in star_last_error() (thread local).
 * Constructors return NULL on failure with the message set the same way.
 */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define STAR_API __declspec(dllexport)
#else
#define STAR_API __attribute__((visibility("default")))
#endif

typedef enum star_status {
  STAR_OK = 0,
  STAR_ERR_INVALID = 1, /* invalid argument or malformed input */
  STAR_ERR_NUMERIC = 2, /* numeric failure: non-PSD, underflow, zero mass */
  STAR_ERR_IO = 3,      /* file access */
  STAR_ERR_UNKNOWN = 4
} star_status;

/* Message describing the most recent error on the calling thread. */
STAR_API const char* star_last_error(void);

typedef struct star_rng star_rng;
typedef struct star_transform star_transform;
typedef struct star_model star_model;

/* ------------------------------------------------------------------ rng */

STAR_API star_rng* star_rng_new(uint64_t seed);
STAR_API void star_rng_free(star_rng* rng);

/* ------------------------------------------------------- rounding scheme */

enum { STAR_SCHEME_FLOOR_HALF = 0, STAR_SCHEME_COUNT_BOUNDED = 1 };

/* Use -HUGE_VAL / HUGE_VAL for unbounded ends. */
typedef struct star_scheme {
  int kind;
  double y_min;
  double y_max;
} star_scheme;

/* --------------------------------------------------------- transformation */

enum {
  STAR_TRANSFORM_NP_CDF = 0,
  STAR_TRANSFORM_POISSON = 1,
  STAR_TRANSFORM_NEGBIN = 2
};

STAR_API star_transform* star_transform_identity(void);
STAR_API star_transform* star_transform_box_cox(double lambda);
STAR_API star_transform* star_transform_fit(const int32_t* y, size_t n, int family,
                                            star_scheme scheme);
STAR_API star_transform* star_transform_from_json(const char* json_text);
/* Caller frees the returned string with star_string_free. */
STAR_API char* star_transform_to_json(const star_transform* t);
STAR_API star_status star_transform_eval(const star_transform* t, double x, double* out);
STAR_API star_status star_transform_inverse(const star_transform* t, double z, double* out);
STAR_API void star_transform_free(star_transform* t);
STAR_API void star_string_free(char* s);

/* ------------------------------------------------------------------ model */

/*
 * Linear STAR model under the g-prior. x is row-major n*p; sigma <= 0
 * requests the built-in pseudo-data least-squares estimate.
 */
STAR_API star_model* star_model_new(const double* x, size_t n, size_t p, const int32_t* y,
                                    star_scheme scheme, const star_transform* g, double psi,
                                    double sigma);
STAR_API void star_model_free(star_model* m);
STAR_API double star_model_sigma(const star_model* m);

/* Posterior coefficient draws; out is row-major count*p. */
STAR_API star_status star_model_sample_posterior(const star_model* m, size_t count,
                                                 star_rng* rng, double* out);
/* Posterior mean of the coefficients; out has length p. */
STAR_API star_status star_model_posterior_mean(const star_model* m, size_t nsamples,
                                               star_rng* rng, double* out);
/* Joint predictive draws at xt (row-major nt*p); out row-major count*nt. */
STAR_API star_status star_model_predict(const star_model* m, const double* xt, size_t nt,
                                        size_t count, star_rng* rng, int32_t* out);
/* Predictive pmf at one covariate row over an explicit support. */
STAR_API star_status star_model_predictive_pmf(const star_model* m, const double* xt,
                                               const int64_t* support, size_t m_support,
                                               size_t nsamples, star_rng* rng, double* probs,
                                               double* raw_sum);
STAR_API star_status star_model_marginal_loglik(const star_model* m, size_t nsamples,
                                                star_rng* rng, double* logml, double* relerr);
/* Data-augmentation Gibbs baseline draws; out row-major count*p. */
STAR_API star_status star_model_gibbs_da(const star_model* m, size_t count, size_t burnin,
                                         star_rng* rng, double* out);

/* Posterior model weights over k models fit to the same data. */
STAR_API star_status star_model_probs(const star_model* const* models, size_t k,
                                      const double* prior_weights, size_t nsamples,
                                      star_rng* rng, double* weights_out);

/* ----------------------------------------------------------- sparse means */

/*
 * Spike-and-slab sparse means chain. psi <= 0 selects the uniform-root slab
 * prior; sigma <= 0 the two-cluster estimate; gaussian != 0 replaces the
 * interval likelihood with the no-rounding Gaussian variant. theta_mean may
 * be NULL.
 */
STAR_API star_status star_sparse_means_run(const int32_t* y, size_t n, star_scheme scheme,
                                           const star_transform* g, double sigma, double a_pi,
                                           double b_pi, double psi, int gaussian, size_t sweeps,
                                           size_t burnin, star_rng* rng, double* inclusion,
                                           double* theta_mean);

/* ---------------------------------------------------------------- metrics */

STAR_API star_status star_metric_rps(const int64_t* support, const double* probs, size_t m,
                                     int64_t observed, double* out);
STAR_API star_status star_metric_ess(const double* chain, size_t n, double* out);
STAR_API star_status star_metric_auc(const double* scores, const int32_t* labels, size_t n,
                                     double* out);

/* ----------------------------------------------------------- command layer */

/*
 * File-level operations behind the CLI subcommands. Configs are JSON text
 * (may be NULL or empty for defaults); result files land in out_dir.
 */
STAR_API star_status star_cmd_fit(const char* data_csv, const char* config_json, uint64_t seed,
                                  size_t draws, const char* out_dir);
STAR_API star_status star_cmd_predict(const char* data_csv, const char* new_csv,
                                      const char* config_json, uint64_t seed, size_t draws,
                                      const char* out_dir);
STAR_API star_status star_cmd_select_model(const char* data_csv, const char* config_json,
                                           uint64_t seed, const char* out_dir);
STAR_API star_status star_cmd_sparse_means(const char* data_csv, const char* config_json,
                                           uint64_t seed, const char* out_dir);
STAR_API star_status star_cmd_simulate(const char* config_json, uint64_t seed,
                                       const char* out_dir);
STAR_API star_status star_cmd_study(const char* config_json, uint64_t seed, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* STAR_C_H */
