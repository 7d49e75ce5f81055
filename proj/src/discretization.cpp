#include "star/discretization.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "star/normal.hpp"

namespace star::discrete {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

long checked_floor(double t) {
  const double f = std::floor(t);
  if (f >= 9.0e18 || f <= -9.0e18) throw std::invalid_argument("round_h: value out of range");
  return static_cast<long>(f);
}
}  // namespace

RoundingScheme RoundingScheme::floor_half() { return {}; }

RoundingScheme RoundingScheme::floor_half(double yMin, double yMax) {
  RoundingScheme s;
  s.yMin = yMin;
  s.yMax = yMax;
  if (!(s.yMin < s.yMax)) throw std::invalid_argument("RoundingScheme: yMin must be < yMax");
  return s;
}

RoundingScheme RoundingScheme::count_bounded(double yMax, double yMin) {
  RoundingScheme s;
  s.kind = Kind::CountBounded;
  s.yMin = yMin;
  s.yMax = yMax;
  if (!(s.yMin < s.yMax)) throw std::invalid_argument("RoundingScheme: yMin must be < yMax");
  return s;
}

bool RoundingScheme::in_support(long j) const {
  const double v = static_cast<double>(j);
  return v >= yMin && v <= yMax;
}

long round_h(const RoundingScheme& scheme, double t) {
  if (!std::isfinite(t)) throw std::invalid_argument("round_h: t must be finite");
  long j;
  if (scheme.kind == RoundingScheme::Kind::FloorHalf) {
    j = checked_floor(t + 0.5);
  } else {
    j = checked_floor(t);
  }
  if (static_cast<double>(j) < scheme.yMin) j = static_cast<long>(scheme.yMin);
  if (static_cast<double>(j) > scheme.yMax) j = static_cast<long>(scheme.yMax);
  return j;
}

long round_latent(const RoundingScheme& scheme, double t) {
  if (std::isnan(t)) throw std::invalid_argument("round_latent: NaN latent value");
  const double cap = 2.0e9;
  return round_h(scheme, std::min(std::max(t, -cap), cap));
}

std::pair<double, double> interval_for(const RoundingScheme& scheme, long j) {
  if (!scheme.in_support(j)) throw std::invalid_argument("interval_for: j outside support");
  const double v = static_cast<double>(j);
  double a, b;
  if (scheme.kind == RoundingScheme::Kind::FloorHalf) {
    a = (v == scheme.yMin) ? -kInf : v - 0.5;
    b = (v == scheme.yMax) ? kInf : v + 0.5;
  } else {
    a = (v == scheme.yMin) ? -kInf : v;
    b = (v == scheme.yMax) ? kInf : v + 1.0;
  }
  return {a, b};
}

// ---------------------------------------------------------------------------
// Transformation

Transformation Transformation::identity() { return {}; }

Transformation Transformation::box_cox(double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("box_cox: lambda must be >= 0");
  Transformation t;
  t.kind_ = Kind::BoxCox;
  t.lambda_ = lambda;
  return t;
}

Transformation Transformation::spline(Kind kind, std::vector<double> x, std::vector<double> y,
                                      bool warning) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("Transformation::spline: need at least two knots");
  for (std::size_t i = 1; i < x.size(); ++i)
    if (!(x[i] > x[i - 1]) || !(y[i] > y[i - 1]))
      throw std::invalid_argument("Transformation::spline: knots must be strictly increasing");
  Transformation t;
  t.kind_ = kind;
  t.warning_ = warning;
  t.knotX_ = std::move(x);
  t.knotY_ = std::move(y);
  t.fit_tangents();
  return t;
}

void Transformation::fit_tangents() {
  const std::size_t n = knotX_.size();
  std::vector<double> delta(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i)
    delta[i] = (knotY_[i + 1] - knotY_[i]) / (knotX_[i + 1] - knotX_[i]);
  slope_.assign(n, 0.0);
  slope_[0] = delta[0];
  slope_[n - 1] = delta[n - 2];
  for (std::size_t i = 1; i + 1 < n; ++i) slope_[i] = 0.5 * (delta[i - 1] + delta[i]);
  // Fritsch-Carlson limiting keeps the interpolant monotone.
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double a = slope_[i] / delta[i];
    const double b = slope_[i + 1] / delta[i];
    const double s = a * a + b * b;
    if (s > 9.0) {
      const double tau = 3.0 / std::sqrt(s);
      slope_[i] = tau * a * delta[i];
      slope_[i + 1] = tau * b * delta[i];
    }
  }
}

double Transformation::eval(double x) const {
  switch (kind_) {
    case Kind::Identity:
      return x;
    case Kind::BoxCox: {
      if (std::isinf(x)) return x;
      if (lambda_ == 0.0) {
        if (x <= 0.0) throw std::domain_error("box_cox: log requires positive argument");
        return std::log(x);
      }
      const double s = (x >= 0.0) ? 1.0 : -1.0;
      return s * std::pow(std::abs(x), lambda_) / lambda_;
    }
    default:
      break;
  }
  if (std::isinf(x)) return x;
  const auto& kx = knotX_;
  if (x <= kx.front()) return knotY_.front() + slope_.front() * (x - kx.front());
  if (x >= kx.back()) return knotY_.back() + slope_.back() * (x - kx.back());
  const auto it = std::upper_bound(kx.begin(), kx.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - kx.begin()) - 1;
  const double h = kx[i + 1] - kx[i];
  const double u = (x - kx[i]) / h;
  const double u2 = u * u, u3 = u2 * u;
  const double h00 = 2 * u3 - 3 * u2 + 1, h10 = u3 - 2 * u2 + u;
  const double h01 = -2 * u3 + 3 * u2, h11 = u3 - u2;
  return h00 * knotY_[i] + h10 * h * slope_[i] + h01 * knotY_[i + 1] + h11 * h * slope_[i + 1];
}

double Transformation::inverse(double z) const {
  switch (kind_) {
    case Kind::Identity:
      return z;
    case Kind::BoxCox: {
      if (std::isinf(z)) return z;
      if (lambda_ == 0.0) return std::exp(z);
      const double w = lambda_ * z;
      const double s = (w >= 0.0) ? 1.0 : -1.0;
      return s * std::pow(std::abs(w), 1.0 / lambda_);
    }
    default:
      break;
  }
  if (std::isinf(z)) return z;
  const auto& ky = knotY_;
  if (z <= ky.front()) return knotX_.front() + (z - ky.front()) / slope_.front();
  if (z >= ky.back()) return knotX_.back() + (z - ky.back()) / slope_.back();
  const auto it = std::upper_bound(ky.begin(), ky.end(), z);
  const std::size_t i = static_cast<std::size_t>(it - ky.begin()) - 1;
  // safeguarded Newton/bisection on the cubic segment
  double lo = knotX_[i], hi = knotX_[i + 1];
  double x = lo + (hi - lo) * (z - ky[i]) / (ky[i + 1] - ky[i]);
  for (int iter = 0; iter < 100; ++iter) {
    const double f = eval(x) - z;
    if (std::abs(f) < 1e-13 * std::max(1.0, std::abs(z))) break;
    if (f > 0.0)
      hi = x;
    else
      lo = x;
    // derivative of the Hermite segment
    const double h = knotX_[i + 1] - knotX_[i];
    const double u = (x - knotX_[i]) / h;
    const double d = (6 * u * u - 6 * u) * (ky[i] - ky[i + 1]) / h +
                     (3 * u * u - 4 * u + 1) * slope_[i] + (3 * u * u - 2 * u) * slope_[i + 1];
    double next = (d > 0.0) ? x - f / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    x = next;
  }
  return x;
}

// ---------------------------------------------------------------------------
// Fitting

namespace {

struct KnotBuilder {
  // sorted (x -> value); observed-value knots take precedence over plain
  // edge knots when values collide (flat CDF gaps).
  std::map<double, std::pair<double, bool>> knots;  // x -> (value, isObserved)

  void add(double x, double v, bool observed) {
    if (!std::isfinite(x) || !std::isfinite(v)) return;
    auto it = knots.find(x);
    if (it != knots.end()) {
      if (observed && !it->second.second) it->second = {v, true};
      return;
    }
    knots.emplace(x, std::make_pair(v, observed));
  }

  // Enforce strictly increasing values; on ties prefer observed knots over
  // plain edges (flat CDF gaps between observed values collapse to one knot).
  std::pair<std::vector<double>, std::vector<double>> finalize() const {
    const double tie = 1e-10;
    std::vector<double> fx, fv;
    std::vector<bool> fo;
    for (const auto& [x, pv] : knots) {
      const double v = pv.first;
      const bool observed = pv.second;
      if (!fx.empty() && v <= fv.back() + tie) {
        if (!observed) continue;
        while (!fx.empty() && !fo.back() && v <= fv.back() + tie) {
          fx.pop_back();
          fv.pop_back();
          fo.pop_back();
        }
        if (!fx.empty() && v <= fv.back() + tie) continue;
      }
      fx.push_back(x);
      fv.push_back(v);
      fo.push_back(observed);
    }
    return {fx, fv};
  }
};

Transformation fit_cdf_transform(const std::vector<long>& uniq, const RoundingScheme& scheme,
                                 const std::function<double(long)>& cdf, double ybar, double sy,
                                 Transformation::Kind kind, bool warning) {
  for (long v : uniq)
    if (!scheme.in_support(v))
      throw std::invalid_argument("transformation fit: response outside scheme support");
  if (!(sy > 0.0)) throw std::invalid_argument("transformation fit: zero sample variance");

  auto g0 = [&](double F) -> double {
    const double f = std::min(std::max(F, 1e-14), 1.0 - 1e-14);
    return ybar + sy * gauss::norm_quantile(f);
  };

  KnotBuilder kb;
  for (long v : uniq) {
    const auto [a, b] = interval_for(scheme, v);
    const double Fv = cdf(v);
    const double Fprev = cdf(v - 1);
    if (std::isfinite(b) && Fv > 0.0 && Fv < 1.0) {
      // edge a_{v+1} carries the step-estimator value at F(v); when the edge
      // coincides with the next observed value it is the same knot
      kb.add(b, g0(Fv), false);
    }
    if (std::isfinite(a)) {
      if (a == static_cast<double>(v)) {
        // count-bounded: the observed value sits on its own lower edge
        if (Fprev > 0.0 && Fprev < 1.0) kb.add(a, g0(Fprev), true);
        else kb.add(a, g0(0.5 * (Fprev + Fv)), true);
      } else if (Fprev > 0.0 && Fprev < 1.0) {
        kb.add(a, g0(Fprev), false);
      }
    }
    if (a != static_cast<double>(v)) {
      // observed value interior to its interval: mid-distribution knot
      kb.add(static_cast<double>(v), g0(0.5 * (Fprev + Fv)), true);
    }
  }
  auto [kx, kv] = kb.finalize();
  if (kx.size() < 2) throw std::invalid_argument("transformation fit: too few usable knots");
  return Transformation::spline(kind, std::move(kx), std::move(kv), warning);
}

std::vector<long> unique_values(const Eigen::VectorXi& y) {
  std::vector<long> uniq(y.data(), y.data() + y.size());
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  return uniq;
}

void sample_moments(const Eigen::VectorXi& y, double& ybar, double& sy) {
  const Eigen::Index n = y.size();
  if (n < 2) throw std::invalid_argument("transformation fit: need n >= 2");
  ybar = y.cast<double>().mean();
  sy = std::sqrt((y.cast<double>().array() - ybar).square().sum() / static_cast<double>(n - 1));
}

}  // namespace

Transformation fit_np_cdf(const Eigen::VectorXi& y, const RoundingScheme& scheme) {
  double ybar, sy;
  sample_moments(y, ybar, sy);
  const double n = static_cast<double>(y.size());
  auto cdf = [&y, n](long j) {
    double c = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i)
      if (y[i] <= j) c += 1.0;
    return (n / (n + 1.0)) * (c / n);
  };
  return fit_cdf_transform(unique_values(y), scheme, cdf, ybar, sy,
                           Transformation::Kind::NpCdf, false);
}

Transformation fit_from_cdf(const std::vector<long>& values,
                            const std::function<double(long)>& cdf, double mean, double sd,
                            const RoundingScheme& scheme, Transformation::Kind kind) {
  if (values.size() < 2) throw std::invalid_argument("fit_from_cdf: need at least two values");
  std::vector<long> uniq = values;
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  return fit_cdf_transform(uniq, scheme, cdf, mean, sd, kind, false);
}

Transformation fit_parametric(const Eigen::VectorXi& y, CountFamily family,
                              const RoundingScheme& scheme) {
  double ybar, sy;
  sample_moments(y, ybar, sy);
  if (!(ybar > 0.0)) throw std::invalid_argument("fit_parametric: mean must be positive");
  const double s2 = sy * sy;

  bool warning = false;
  if (family == CountFamily::NegBin && s2 <= ybar) {
    family = CountFamily::Poisson;
    warning = true;
  }

  std::function<double(long)> cdf;
  Transformation::Kind kind;
  if (family == CountFamily::Poisson) {
    kind = warning ? Transformation::Kind::ParametricNegBin : Transformation::Kind::ParametricPoisson;
    cdf = [ybar](long j) {
      if (j < 0) return 0.0;
      return boost::math::gamma_q(static_cast<double>(j) + 1.0, ybar);
    };
  } else {
    kind = Transformation::Kind::ParametricNegBin;
    const double r = ybar * ybar / (s2 - ybar);
    const double prob = r / (r + ybar);
    cdf = [r, prob](long j) {
      if (j < 0) return 0.0;
      return boost::math::ibeta(r, static_cast<double>(j) + 1.0, prob);
    };
  }
  return fit_cdf_transform(unique_values(y), scheme, cdf, ybar, sy, kind, warning);
}

gauss::BoxRegion interval_image(const Transformation& t, const RoundingScheme& scheme,
                                const Eigen::VectorXi& y) {
  gauss::BoxRegion box;
  box.lower.resize(y.size());
  box.upper.resize(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const auto [a, b] = interval_for(scheme, y[i]);
    box.lower[i] = t.eval(a);
    box.upper[i] = t.eval(b);
  }
  return box;
}

// ---------------------------------------------------------------------------
// JSON round trip

nlohmann::json Transformation::to_json() const {
  nlohmann::json j;
  switch (kind_) {
    case Kind::Identity:
      j["kind"] = "identity";
      break;
    case Kind::BoxCox:
      j["kind"] = "box-cox";
      j["lambda"] = lambda_;
      break;
    case Kind::NpCdf:
      j["kind"] = "np-cdf";
      break;
    case Kind::ParametricPoisson:
      j["kind"] = "parametric-poisson";
      break;
    case Kind::ParametricNegBin:
      j["kind"] = "parametric-negbin";
      break;
  }
  if (!knotX_.empty()) {
    j["knots_x"] = knotX_;
    j["knots_y"] = knotY_;
    j["slopes"] = slope_;
  }
  if (warning_) j["warning"] = true;
  return j;
}

Transformation Transformation::from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "identity") return identity();
  if (kind == "box-cox") return box_cox(j.at("lambda").get<double>());
  Kind k;
  if (kind == "np-cdf")
    k = Kind::NpCdf;
  else if (kind == "parametric-poisson")
    k = Kind::ParametricPoisson;
  else if (kind == "parametric-negbin")
    k = Kind::ParametricNegBin;
  else
    throw std::invalid_argument("Transformation::from_json: unknown kind '" + kind + "'");
  Transformation t = spline(k, j.at("knots_x").get<std::vector<double>>(),
                            j.at("knots_y").get<std::vector<double>>(),
                            j.value("warning", false));
  return t;
}

Transformation Transformation::from_json_string(const std::string& text) {
  return from_json(nlohmann::json::parse(text));
}

std::string Transformation::to_json_string() const { return to_json().dump(); }

}  // namespace star::discrete
