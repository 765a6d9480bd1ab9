#pragma once

// Generalized Extreme Value distribution
//
//   F(x) = exp(-[1 + shape (x - location) / scale]^(-1/shape))
//
// with the Gumbel limit exp(-exp(-(x - location) / scale)) used whenever
// |shape| < kGumbelSwitch. Near-zero shapes outside the switch go through
// log1p/expm1 so both branches agree to rounding at the boundary.

#include <cmath>
#include <limits>
#include <span>

#include <Eigen/Core>

#include "ensx/error.hpp"

namespace ensx {

inline constexpr double kGumbelSwitch = 1e-8;

// Finite stand-in for log(0) so a simplex step outside the support can be
// ranked and recovered from.
inline constexpr double kLogLikSentinel = -1e300;

template <typename Scalar>
struct GevParamsT {
  Scalar location{0};
  Scalar scale{1};
  Scalar shape{0};

  Eigen::Matrix<Scalar, 3, 1> as_vector() const { return {location, scale, shape}; }
  static GevParamsT from_vector(const Eigen::Matrix<Scalar, 3, 1>& v) {
    return {v(0), v(1), v(2)};
  }
  bool operator==(const GevParamsT&) const = default;
};

using GevParams = GevParamsT<double>;

template <typename Scalar>
bool is_gumbel(Scalar shape) {
  using std::abs;
  return abs(shape) < Scalar(kGumbelSwitch);
}

template <typename Scalar>
bool is_valid(const GevParamsT<Scalar>& p) {
  using std::isfinite;
  return isfinite(p.location) && isfinite(p.scale) && isfinite(p.shape) && p.scale > Scalar(0);
}

template <typename Scalar>
void validate(const GevParamsT<Scalar>& p) {
  if (!is_valid(p)) throw DomainError("invalid GEV parameters: scale must be > 0 and all finite");
}

// |shape| >= 0.5 is legal but the MLE loses its usual asymptotics there.
template <typename Scalar>
bool shape_outside_regular_range(const GevParamsT<Scalar>& p) {
  using std::abs;
  return abs(p.shape) >= Scalar(0.5);
}

template <typename Scalar>
Scalar gev_cdf(Scalar x, const GevParamsT<Scalar>& p) {
  using std::exp;
  using std::log1p;
  validate(p);
  const Scalar z = (x - p.location) / p.scale;
  if (is_gumbel(p.shape)) return exp(-exp(-z));
  const Scalar t = Scalar(1) + p.shape * z;
  if (t <= Scalar(0)) return p.shape > Scalar(0) ? Scalar(0) : Scalar(1);
  return exp(-exp(-log1p(p.shape * z) / p.shape));
}

template <typename Scalar>
Scalar gev_quantile(Scalar prob, const GevParamsT<Scalar>& p) {
  using std::expm1;
  using std::log;
  validate(p);
  if (!(prob > Scalar(0) && prob < Scalar(1))) throw DomainError("quantile probability outside (0,1)");
  const Scalar log_y = log(-log(prob));
  if (is_gumbel(p.shape)) return p.location - p.scale * log_y;
  return p.location + p.scale * expm1(-p.shape * log_y) / p.shape;
}

template <typename Scalar>
Scalar gev_logpdf(Scalar x, const GevParamsT<Scalar>& p) {
  using std::exp;
  using std::log;
  using std::log1p;
  validate(p);
  const Scalar z = (x - p.location) / p.scale;
  if (is_gumbel(p.shape)) return -log(p.scale) - z - exp(-z);
  const Scalar t = Scalar(1) + p.shape * z;
  if (t <= Scalar(0)) return -std::numeric_limits<Scalar>::infinity();
  const Scalar lt = log1p(p.shape * z);
  return -log(p.scale) - (Scalar(1) + Scalar(1) / p.shape) * lt - exp(-lt / p.shape);
}

// Log-likelihood of an i.i.d. sample; kLogLikSentinel when any point falls
// outside the support or the parameters are invalid.
template <typename Scalar>
Scalar gev_loglik(const GevParamsT<Scalar>& p, std::span<const Scalar> sample) {
  if (sample.empty()) throw DomainError("log-likelihood of empty sample");
  if (!is_valid(p)) return Scalar(kLogLikSentinel);
  Scalar total(0);
  for (const Scalar& x : sample) {
    const Scalar lp = gev_logpdf(x, p);
    if (!(lp > Scalar(kLogLikSentinel))) return Scalar(kLogLikSentinel);
    total += lp;
  }
  return total;
}

// Vectorised double-precision path used by the optimizer.
inline double gev_loglik(const GevParams& p, std::span<const double> sample) {
  if (sample.empty()) throw DomainError("log-likelihood of empty sample");
  if (!is_valid(p)) return kLogLikSentinel;
  const auto n = static_cast<Eigen::Index>(sample.size());
  const Eigen::Map<const Eigen::ArrayXd> x(sample.data(), n);
  const double inv_scale = 1.0 / p.scale;
  const double base = -static_cast<double>(n) * std::log(p.scale);
  double ll = 0.0;
  if (is_gumbel(p.shape)) {
    const Eigen::ArrayXd z = (x - p.location) * inv_scale;
    ll = base - z.sum() - (-z).exp().sum();
  } else if (std::abs(p.shape) < 1e-4) {
    ll = base;
    for (double xi : sample) {
      const double u = p.shape * (xi - p.location) * inv_scale;
      if (!(u > -1.0)) return kLogLikSentinel;
      const double lt = std::log1p(u);
      ll -= (1.0 + 1.0 / p.shape) * lt + std::exp(-lt / p.shape);
    }
  } else {
    const Eigen::ArrayXd t = 1.0 + (p.shape * inv_scale) * (x - p.location);
    if (!(t.minCoeff() > 0.0)) return kLogLikSentinel;
    const Eigen::ArrayXd lt = t.log();
    ll = base - (1.0 + 1.0 / p.shape) * lt.sum() - (lt * (-1.0 / p.shape)).exp().sum();
  }
  if (!std::isfinite(ll) || ll < kLogLikSentinel) return kLogLikSentinel;
  return ll;
}

// Gradient of the T-year return level with respect to (location, scale,
// shape). With y = -log(1 - 1/T):
//   dz/dlocation = 1
//   dz/dscale    = -(1 - y^-shape) / shape
//   dz/dshape    = scale (1 - y^-shape) / shape^2 - scale y^-shape log(y) / shape
// The shape derivative cancels catastrophically for small |shape log y|, so a
// Taylor series is used there; at shape = 0 it reduces to scale log(y)^2 / 2.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> return_level_gradient(const GevParamsT<Scalar>& p, Scalar return_period) {
  using std::abs;
  using std::exp;
  using std::expm1;
  using std::log;
  validate(p);
  if (!(return_period > Scalar(1))) throw DomainError("return period must exceed 1 year");
  const Scalar log_y = log(-log(Scalar(1) - Scalar(1) / return_period));
  const Scalar a = -p.shape * log_y;
  Eigen::Matrix<Scalar, 3, 1> g;
  g(0) = Scalar(1);
  if (abs(a) < Scalar(1e-3)) {
    // expm1(-shape L)/shape = sum_k (-L)^k shape^(k-1) / k!
    const Scalar m = -log_y;
    const Scalar s = p.shape;
    g(1) = m + m * m * s / Scalar(2) + m * m * m * s * s / Scalar(6) +
           m * m * m * m * s * s * s / Scalar(24);
    g(2) = p.scale * (m * m / Scalar(2) + Scalar(2) * m * m * m * s / Scalar(6) +
                      Scalar(3) * m * m * m * m * s * s / Scalar(24) +
                      Scalar(4) * m * m * m * m * m * s * s * s / Scalar(120));
    return g;
  }
  const Scalar em = expm1(a);  // y^-shape - 1
  g(1) = em / p.shape;
  g(2) = -p.scale * em / (p.shape * p.shape) - p.scale * log_y * exp(a) / p.shape;
  return g;
}

}  // namespace ensx
