#pragma once

#include <Eigen/Dense>

#include "star/discretization.hpp"
#include "star/normal.hpp"

namespace star::basis {

/// Basis family for nonlinear regression on a scalar input.
struct BasisSpec {
  enum class Kind { BSpline, OrthPoly };
  Kind kind = Kind::BSpline;
  int degree = 3;
  int interiorKnots = 10;  // b-spline only

  static BasisSpec bspline(int degree, int interiorKnots);
  static BasisSpec orth_poly(int degree);
};

/// Basis reparametrized so X'X is exactly diagonal (thin SVD of the raw
/// basis; X = U S, rotation = V). Fitted values X theta are unchanged under
/// the rotation, and new inputs map through the same rotation.
struct DiagonalizedBasis {
  Eigen::MatrixXd X;         // n x p with X'X = diag(d)
  Eigen::VectorXd d;         // diagonal entries (squared singular values)
  Eigen::MatrixXd rotation;  // praw x p, maps raw coefficients/evaluations
  BasisSpec spec;
  Eigen::VectorXd knots;     // b-spline knot vector (empty for polynomials)
  double tauMin = 0.0, tauMax = 1.0;
  bool reduced = false;      // true when rank deficiency dropped directions

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index p() const { return X.cols(); }

  /// Reparametrized basis rows at new input points.
  Eigen::MatrixXd at(const Eigen::VectorXd& tauNew) const;
};

/// Raw (unrotated) basis matrix evaluation.
Eigen::MatrixXd raw_basis(const BasisSpec& spec, const Eigen::VectorXd& tau,
                          const Eigen::VectorXd& knots, double tauMin, double tauMax);

/// Build the diagonalized basis on the observed inputs.
DiagonalizedBasis build_diagonalized(const BasisSpec& spec, const Eigen::VectorXd& tau);

/// Joint predictive draws for the nonlinear model with prior
/// theta ~ N(0, psi sigma^2 I) in the reparametrized space. All steps use
/// only diagonal scalings and matrix products; the truncated draw V0 is
/// shared across every requested point in one call.
Eigen::MatrixXi predict_nl(const DiagonalizedBasis& basis, const Eigen::VectorXi& y,
                           const discrete::RoundingScheme& scheme,
                           const discrete::Transformation& transform, double psi, double sigma,
                           const Eigen::VectorXd& tauNew, std::size_t count, Rng& rng);

}  // namespace star::basis
