#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "star/discretization.hpp"

namespace star::harness {

struct SyntheticDataset {
  Eigen::MatrixXd X;           // covariates, or the input grid as one column
  Eigen::VectorXi y;
  Eigen::VectorXd thetaTrue;   // regression generators
  Eigen::VectorXd fTrue;       // latent curve at the grid (nonlinear generators)
  Eigen::VectorXi gammaTrue;   // sparse-means generator
};

/// Negative binomial counts on independent standard normal covariates.
/// Coefficients: ceil(p/2) leading entries 1/sqrt(p), the rest zero;
/// intercept log(10); dispersion 5.
SyntheticDataset gen_negbin_regression(int n, int p, std::uint64_t seed);

/// Negative binomial counts around exp(f_true) with dispersion 10, capped at
/// 30; f_true is a random degree-1..4 polynomial curve on an equispaced grid.
SyntheticDataset gen_nl_negbin(int n, std::uint64_t seed);

/// Latent Gaussian curve pushed through the smoothed mixture-CDF
/// transformation (Poisson(10) bulk, heaps at {5,...,25}, boundary mass at
/// {0,30}), sigma = 0.7.
SyntheticDataset gen_nl_mixture_cdf(int n, std::uint64_t seed);

/// Rounded sparse means: y = floor(theta + eps), theta_i = mu * gamma_i with
/// exactly round(n * propSignal) active indices.
SyntheticDataset gen_rounded_sparse(int n, double mu, double propSignal, std::uint64_t seed);

/// The analytic mixture CDF transformation used by gen_nl_mixture_cdf,
/// exposed so models in the study can be compared against the generator.
discrete::Transformation mixture_cdf_transform();

/// Exact Poisson and negative binomial samplers used by the generators.
int rpois(double lambda, Rng& rng);
int rnegbin(double mean, double dispersion, Rng& rng);

}  // namespace star::harness
