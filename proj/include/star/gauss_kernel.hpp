#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "star/normal.hpp"

namespace star::gauss {

/// Mean and covariance of a Gaussian block. The covariance must be symmetric
/// (1e-10 relative) and positive semidefinite up to the jitter budget.
struct GaussianParams {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  Eigen::Index dim() const { return mean.size(); }
};

/// Axis-aligned box with extended-real endpoints; lower[i] < upper[i].
struct BoxRegion {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Eigen::Index dim() const { return lower.size(); }

  /// The whole of R^n.
  static BoxRegion whole(Eigen::Index n);
  bool contains(const Eigen::VectorXd& x) const;
  /// Concatenation [this x other].
  BoxRegion concat(const BoxRegion& other) const;
  /// Componentwise shift by -offset (the region C - mu).
  BoxRegion shifted(const Eigen::VectorXd& offset) const;
};

/// Saddle point of the exponentially tilted importance bound for a truncated
/// Gaussian, in the reordered and row-scaled factor coordinates.
///
/// `tilt` is the dominating point the proposal concentrates on; `shift` holds
/// the tilting locations of the sequential proposal (its last entry is 0).
/// `logNormConst` is the log of the accept-reject bound.
struct TiltingSolution {
  Eigen::VectorXd tilt;
  Eigen::VectorXd shift;
  std::vector<int> permutation;
  double logNormConst = 0.0;
  double expectedAcceptRate = 1.0;
  bool converged = true;

  // Factor data reused by the samplers: permuted lower-triangular factor and
  // the permuted, mean-subtracted bounds.
  Eigen::MatrixXd L;
  Eigen::VectorXd lo, hi;
};

struct BoxProbability {
  double estimate = 0.0;
  double relErr = 0.0;
  double logEstimate = 0.0;
  bool underflow = false;
};

struct TmvnDraws {
  Eigen::MatrixXd draws;     // count x n, every row strictly inside the box
  bool approximate = false;  // true when the Gibbs fallback produced the draws
};

/// Cholesky factorization of the covariance under the greedy
/// least-remaining-mass variable ordering. Returns (L, perm) with
/// L L' = P Sigma P' and perm[j] = original index of position j.
std::pair<Eigen::MatrixXd, std::vector<int>> cholesky_reordered(const GaussianParams& params,
                                                                const BoxRegion& box);

/// Estimate pr(X in box) for X ~ N(mean, cov) by tilted importance sampling;
/// n = 1 is evaluated exactly (relErr 0).
BoxProbability box_probability(const GaussianParams& params, const BoxRegion& box,
                               std::size_t nSamples, Rng& rng);

/// Solve the minimax tilting saddle point by damped Newton iteration.
TiltingSolution solve_tilting(const GaussianParams& params, const BoxRegion& box);

/// Exact accept-reject draws from N(mean, cov) restricted to the box, with a
/// coordinate Gibbs fallback (flagged approximate) for near-degenerate
/// regions where the acceptance rate collapses.
TmvnDraws sample_tmvn(const GaussianParams& params, const BoxRegion& box, std::size_t count,
                      Rng& rng);

/// Cholesky of a symmetric PSD matrix under the shared jitter policy:
/// symmetrize, factor, on failure add 1e-8*trace/n to the diagonal and retry
/// once. Throws on failure beyond the jitter budget.
Eigen::MatrixXd chol_psd(const Eigen::MatrixXd& m);

namespace detail {
/// The coordinate Gibbs fallback used by sample_tmvn (500 burn-in sweeps,
/// thinning 1), exposed for direct testing.
Eigen::MatrixXd sample_tmvn_gibbs(const GaussianParams& params, const BoxRegion& box,
                                  std::size_t count, Rng& rng);
}  // namespace detail

}  // namespace star::gauss
