#include "star/normal.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace star {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kSqrt2 = 1.41421356237309504880;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

double runif(Rng& rng) {
  // 53-bit mantissa, shifted into the open interval.
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

double rnorm(Rng& rng) { return gauss::norm_quantile(runif(rng)); }

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + (index + 1) * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace gauss {

double norm_pdf(double x) { return std::exp(-0.5 * x * x - kLogSqrt2Pi); }

double norm_cdf(double x) {
  if (x < -37.0) return 0.0;
  if (x > 37.0) return 1.0;
  return 0.5 * std::erfc(-x * kInvSqrt2);
}

double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -kInf;
    if (p == 1.0) return kInf;
    throw std::domain_error("norm_quantile: p outside [0,1]");
  }
  return -kSqrt2 * boost::math::erfc_inv(2.0 * p);
}

double norm_logtail(double x) {
  if (x == -kInf) return 0.0;
  if (x == kInf) return -kInf;
  if (x <= 30.0) {
    double q = 0.5 * std::erfc(x * kInvSqrt2);
    if (q > 0.0) return std::log(q);
  }
  // Asymptotic series for the Mills ratio; relative error < 1e-10 at x = 30.
  const double x2 = x * x;
  double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
  return -0.5 * x2 - kLogSqrt2Pi - std::log(x) + std::log(series);
}

double ln_interval_prob(double a, double b) {
  if (!(a < b)) return -kInf;
  if (a == -kInf && b == kInf) return 0.0;
  if (a >= 0.0) {
    // both endpoints in the upper tail
    const double pa = norm_logtail(a);
    const double pb = norm_logtail(b);
    const double diff = pb - pa;
    return pa + ((diff < 0.0) ? std::log1p(-std::exp(diff)) : -kInf);
  }
  if (b <= 0.0) return ln_interval_prob(-b, -a);
  // interval straddles zero: 1 - Q(-a) - Q(b)
  const double qa = std::exp(norm_logtail(-a));
  const double qb = std::exp(norm_logtail(b));
  return std::log1p(-(qa + qb));
}

double truncnorm_mean(double a, double b) {
  const double w = ln_interval_prob(a, b);
  if (w == -kInf) return 0.5 * (a + b);
  const double pl = std::isinf(a) ? 0.0 : std::exp(-0.5 * a * a - kLogSqrt2Pi - w);
  const double pu = std::isinf(b) ? 0.0 : std::exp(-0.5 * b * b - kLogSqrt2Pi - w);
  return pl - pu;
}

namespace {

// One-sided tail sampler for N(0,1) on [l,u] with l > 0: accept-reject from a
// Rayleigh-type proposal (exact for arbitrarily remote l).
double tail_sample(double l, double u, Rng& rng) {
  const double c = 0.5 * l * l;
  const double f = std::isinf(u) ? -1.0 : std::expm1(c - 0.5 * u * u);
  while (true) {
    const double x = c - std::log1p(runif(rng) * f);
    const double v = runif(rng);
    if (v * v * x <= c) return std::sqrt(2.0 * x);
  }
}

// Mid-range two-sided sampler: plain rejection for wide intervals, inverse
// transform through the upper-tail parametrization otherwise.
double mid_sample(double l, double u, Rng& rng) {
  if (u - l > 2.0) {
    while (true) {
      const double x = rnorm(rng);
      if (x >= l && x <= u) return x;
    }
  }
  const double pl = 0.5 * std::erfc(l * kInvSqrt2);
  const double pu = std::isinf(u) ? 0.0 : 0.5 * std::erfc(u * kInvSqrt2);
  const double p = pl - (pl - pu) * runif(rng);
  return kSqrt2 * boost::math::erfc_inv(2.0 * p);
}

}  // namespace

double sample_truncnorm_std(double a, double b, Rng& rng) {
  constexpr double kSwitch = 0.66;
  if (!(a < b)) return a;  // collapsed interval
  double x;
  if (a > kSwitch) {
    x = tail_sample(a, b, rng);
  } else if (b < -kSwitch) {
    x = -tail_sample(-b, -a, rng);
  } else {
    x = mid_sample(a, b, rng);
  }
  return std::min(std::max(x, a), b);
}

double sample_truncnorm_scalar(double mean, double sd, double lo, double hi, Rng& rng) {
  if (!(sd > 0.0)) throw std::invalid_argument("sample_truncnorm_scalar: sd must be positive");
  if (!(lo < hi)) throw std::invalid_argument("sample_truncnorm_scalar: empty interval");
  const double a = (lo - mean) / sd;
  const double b = (hi - mean) / sd;
  if (ln_interval_prob(a, b) < -690.0)
    throw std::runtime_error("sample_truncnorm_scalar: interval mass underflows");
  const double z = sample_truncnorm_std(a, b, rng);
  double x = mean + sd * z;
  if (x <= lo) x = std::nextafter(lo, hi);
  if (x >= hi) x = std::nextafter(hi, lo);
  return x;
}

}  // namespace gauss
}  // namespace star
