#pragma once

#include <Eigen/Dense>
#include <functional>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <utility>
#include <vector>

#include "star/gauss_kernel.hpp"

namespace star::discrete {

/// Partition of the integer support into half-open intervals [a_j, a_{j+1}).
///
///  - floor_half:     A_j = [j - 0.5, j + 0.5), clamped at optional bounds.
///  - count_bounded:  A_ymin = (-inf, ymin + 1), A_j = [j, j + 1),
///                    A_ymax = [ymax, inf). With ymin = -inf this is the
///                    plain floor partition on all of Z.
struct RoundingScheme {
  enum class Kind { FloorHalf, CountBounded };
  Kind kind = Kind::FloorHalf;
  double yMin = -std::numeric_limits<double>::infinity();
  double yMax = std::numeric_limits<double>::infinity();

  static RoundingScheme floor_half();
  static RoundingScheme floor_half(double yMin, double yMax);
  static RoundingScheme count_bounded(double yMax, double yMin = 0.0);

  bool in_support(long j) const;
};

/// h(t): the integer the latent value t rounds to.
long round_h(const RoundingScheme& scheme, double t);

/// round_h with overflowing or infinite inputs clamped toward the scheme
/// bounds; used by predictive samplers where g^{-1} can overflow (log
/// transforms).
long round_latent(const RoundingScheme& scheme, double t);

/// The partition interval (a_j, a_{j+1}) owning integer j; boundary
/// intervals are unbounded. Throws if j is outside the support.
std::pair<double, double> interval_for(const RoundingScheme& scheme, long j);

/// Monotone increasing transformation g with exact inverse. Fitted kinds are
/// monotone cubic interpolating splines (Fritsch-Carlson tangents) through
/// the step-estimator knots, extended linearly outside the knot range with
/// the +-inf limits imposed.
class Transformation {
 public:
  enum class Kind { Identity, BoxCox, NpCdf, ParametricPoisson, ParametricNegBin };

  Transformation() = default;

  static Transformation identity();
  static Transformation box_cox(double lambda);

  double eval(double x) const;
  double inverse(double z) const;
  double operator()(double x) const { return eval(x); }

  Kind kind() const { return kind_; }
  double lambda() const { return lambda_; }
  /// True when a requested negative-binomial fit degraded to Poisson.
  bool warning() const { return warning_; }

  const std::vector<double>& knot_x() const { return knotX_; }
  const std::vector<double>& knot_y() const { return knotY_; }
  const std::vector<double>& slopes() const { return slope_; }

  nlohmann::json to_json() const;
  static Transformation from_json(const nlohmann::json& j);
  static Transformation from_json_string(const std::string& text);
  std::string to_json_string() const;

  /// Spline constructor used by the fitting routines; knots strictly
  /// increasing in both coordinates.
  static Transformation spline(Kind kind, std::vector<double> x, std::vector<double> y,
                               bool warning = false);

 private:
  Kind kind_ = Kind::Identity;
  double lambda_ = 1.0;
  bool warning_ = false;
  std::vector<double> knotX_, knotY_, slope_;

  void fit_tangents();
};

/// Nonparametric CDF-matching transformation (step estimator smoothed by a
/// monotone interpolating spline). Requires n >= 2 and nonzero variance.
Transformation fit_np_cdf(const Eigen::VectorXi& y, const RoundingScheme& scheme);

enum class CountFamily { Poisson, NegBin };

/// Same construction with the empirical CDF replaced by a method-of-moments
/// parametric CDF. A negative-binomial request with s^2 <= mean falls back
/// to Poisson and sets the warning flag.
Transformation fit_parametric(const Eigen::VectorXi& y, CountFamily family,
                              const RoundingScheme& scheme);

/// The same knot pipeline driven by an explicit CDF over the given integer
/// values with moment-matching location/scale. Used for transformations
/// derived from a known distribution rather than a sample.
Transformation fit_from_cdf(const std::vector<long>& values,
                            const std::function<double(long)>& cdf, double mean, double sd,
                            const RoundingScheme& scheme, Transformation::Kind kind);

/// Componentwise image boxes g(A_{y_i}); infinite endpoints map to infinite.
gauss::BoxRegion interval_image(const Transformation& t, const RoundingScheme& scheme,
                                const Eigen::VectorXi& y);

}  // namespace star::discrete
