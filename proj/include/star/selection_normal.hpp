#pragma once

#include <Eigen/Dense>

#include "star/gauss_kernel.hpp"

namespace star::selnorm {

/// The law of a Gaussian block theta conditioned on a jointly Gaussian block
/// z lying in the box `region`. An empty region (n = 0) is the plain
/// Gaussian N(muTheta, sigmaTheta).
struct SelectionNormal {
  Eigen::VectorXd muZ;         // n
  Eigen::VectorXd muTheta;     // p
  Eigen::MatrixXd sigmaZ;      // n x n
  Eigen::MatrixXd sigmaTheta;  // p x p
  Eigen::MatrixXd sigmaZTheta; // n x p
  gauss::BoxRegion region;     // n

  Eigen::Index n() const { return muZ.size(); }
  Eigen::Index p() const { return muTheta.size(); }

  /// Plain Gaussian expressed as a selection normal with empty z block.
  static SelectionNormal gaussian(Eigen::VectorXd mean, Eigen::MatrixXd cov);
};

/// A Monte Carlo estimated scalar with its relative standard error.
struct Estimate {
  double value = 0.0;
  double relErr = 0.0;
};

struct Moments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Density p(theta | z in C) evaluated via the ratio of box probabilities.
Estimate density(const SelectionNormal& d, const Eigen::VectorXd& theta, std::size_t nSamples,
                 Rng& rng);

/// Moment generating function at s.
Estimate mgf(const SelectionNormal& d, const Eigen::VectorXd& s, std::size_t nSamples, Rng& rng);

/// Exact draws via the constructive representation
/// theta = muTheta + V1 + sigmaZTheta' sigmaZ^{-1} V0^{(C - muZ)}.
Eigen::MatrixXd sample(const SelectionNormal& d, std::size_t count, Rng& rng);

/// Mean and covariance through the closed-form maps applied to Monte Carlo
/// truncated moments of V0.
Moments moments(const SelectionNormal& d, std::size_t nSamples, Rng& rng);

/// Law of A theta + a with independent Gaussian a ~ N(noiseMean, noiseCov).
SelectionNormal linear_combine(const SelectionNormal& d, const Eigen::MatrixXd& a,
                               const Eigen::VectorXd& noiseMean, const Eigen::MatrixXd& noiseCov);

/// Conjugate update: treat `prior` as the coefficient prior and absorb a new
/// batch with design X, noise scale sigma, and constraint `newBox` on the
/// new latent block. The region becomes the Cartesian product.
SelectionNormal sequential_update(const SelectionNormal& prior, const Eigen::MatrixXd& x,
                                  double sigma, const gauss::BoxRegion& newBox);

}  // namespace star::selnorm
