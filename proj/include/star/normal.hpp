#pragma once

#include <cstdint>
#include <random>

namespace star {

/// Generator type used throughout; all samplers take one explicitly and are
/// pure given its state.
using Rng = std::mt19937_64;

/// Uniform draw on the open interval (0,1) with 53-bit resolution.
double runif(Rng& rng);

/// Standard normal draw via the inverse CDF (one uniform consumed per draw).
double rnorm(Rng& rng);

/// Derive an independent stream seed from a master seed (splitmix64 mixing).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

namespace gauss {

double norm_pdf(double x);
double norm_cdf(double x);
double norm_quantile(double p);

/// log of the upper tail, ln pr(Z > x); accurate for |x| up to ~1e3 via an
/// asymptotic expansion beyond the erfc range.
double norm_logtail(double x);

/// ln{Phi(b) - Phi(a)} for a <= b, stable when the interval sits far in
/// either tail. Returns -inf for an empty interval.
double ln_interval_prob(double a, double b);

/// Mean of a standard normal truncated to [a, b].
double truncnorm_mean(double a, double b);

/// Draw from N(0,1) truncated to [a, b]. Inverse-CDF in the bulk, Rayleigh
/// accept-reject in the tails; exact for arbitrarily remote intervals.
double sample_truncnorm_std(double a, double b, Rng& rng);

/// Draw from N(mean, sd^2) truncated to (lo, hi); lo/hi may be infinite.
/// Throws if the interval mass underflows.
double sample_truncnorm_scalar(double mean, double sd, double lo, double hi, Rng& rng);

}  // namespace gauss
}  // namespace star
