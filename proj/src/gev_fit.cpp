#include "ensx/gev_fit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <boost/math/distributions/normal.hpp>

#include "ensx/error.hpp"
#include "ensx/quantile.hpp"
#include "ensx/random.hpp"

namespace ensx {

namespace {

constexpr double kEulerGamma = 0.5772156649015329;
constexpr double kMaxCondition = 1e12;

GevParams from_internal(const Eigen::Vector3d& theta) {
  return {theta(0), std::exp(theta(1)), theta(2)};
}

double negative_loglik(const GevParams& p, std::span<const double> sorted) {
  return -gev_loglik(p, sorted);
}

}  // namespace

std::optional<Eigen::Matrix3d> gev_nll_hessian(const GevParams& params, std::span<const double> sorted) {
  const Eigen::Vector3d theta = params.as_vector();
  Eigen::Vector3d h;
  for (int i = 0; i < 3; ++i) h(i) = std::max(1e-5, 1e-5 * std::abs(theta(i)));

  bool outside = false;
  auto f = [&](const Eigen::Vector3d& t) {
    const GevParams p = GevParams::from_vector(t);
    if (!is_valid(p)) {
      outside = true;
      return 0.0;
    }
    const double ll = gev_loglik(p, sorted);
    if (ll <= kLogLikSentinel) outside = true;
    return -ll;
  };

  const double f0 = f(theta);
  Eigen::Matrix3d hess;
  for (int i = 0; i < 3; ++i) {
    Eigen::Vector3d ei = Eigen::Vector3d::Zero();
    ei(i) = h(i);
    hess(i, i) = (f(theta + ei) - 2.0 * f0 + f(theta - ei)) / (h(i) * h(i));
    for (int j = 0; j < i; ++j) {
      Eigen::Vector3d ej = Eigen::Vector3d::Zero();
      ej(j) = h(j);
      const double v = (f(theta + ei + ej) - f(theta + ei - ej) - f(theta - ei + ej) +
                        f(theta - ei - ej)) /
                       (4.0 * h(i) * h(j));
      hess(i, j) = v;
      hess(j, i) = v;
    }
  }
  if (outside || !hess.allFinite()) return std::nullopt;
  return hess;
}

GevFit fit_gev_mle(std::span<const double> sample, const FitOptions& options) {
  if (sample.empty()) throw DomainError("cannot fit GEV to an empty sample");
  for (double v : sample)
    if (!std::isfinite(v)) throw DomainError("GEV sample contains a non-finite value");

  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back()) throw FitError("zero variance");

  GevFit fit;
  fit.n_samples = sorted.size();

  const double sd = std_dev(sorted);
  const double scale0 = std::sqrt(6.0) * sd / std::numbers::pi;
  GevParams start{mean(sorted) - kEulerGamma * scale0, scale0, 0.1};
  if (options.start) start = *options.start;
  validate(start);
  if (gev_loglik(start, sorted) <= kLogLikSentinel) start.shape = 0.0;

  const Eigen::Vector3d theta0(start.location, std::log(start.scale), start.shape);
  const Eigen::Vector3d step = options.step.value_or(Eigen::Vector3d(0.2 * start.scale, 0.1, 0.05));

  auto objective = [&](const Eigen::Vector3d& theta) {
    return negative_loglik(from_internal(theta), sorted);
  };
  const auto nm = nelder_mead<double, 3>(objective, theta0, step, options.optimizer);

  fit.params = from_internal(nm.argmin);
  fit.log_likelihood = -nm.minimum;
  fit.n_iterations = nm.iterations;
  fit.converged = nm.converged && fit.log_likelihood > kLogLikSentinel;
  if (!nm.converged) fit.warnings.emplace_back("optimizer reached the iteration limit");
  if (fit.n_samples < kMinFitSampleSize) {
    fit.converged = false;
    fit.warnings.emplace_back("sample size below " + std::to_string(kMinFitSampleSize));
  }
  if (shape_outside_regular_range(fit.params)) fit.warnings.emplace_back("|shape| >= 0.5");

  if (options.compute_covariance) {
    const auto hess = gev_nll_hessian(fit.params, sorted);
    if (!hess) {
      fit.converged = false;
      fit.warnings.emplace_back("Hessian stencil left the support");
    } else {
      const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(*hess);
      const Eigen::Vector3d lambda = eig.eigenvalues();
      const double lmax = lambda.maxCoeff();
      const double lmin = lambda.minCoeff();
      if (!(lmin > 0.0)) {
        fit.converged = false;
        fit.warnings.emplace_back("Hessian not positive definite");
      } else if (lmax / lmin > kMaxCondition) {
        fit.converged = false;
        fit.warnings.emplace_back("Hessian ill-conditioned; pseudo-inverse used");
      }
      // Pseudo-inverse over the well-determined positive eigenvalues; equals
      // the plain inverse for a well-conditioned positive-definite Hessian.
      Eigen::Vector3d inv = Eigen::Vector3d::Zero();
      for (int i = 0; i < 3; ++i)
        if (lambda(i) > 0.0 && lambda(i) * kMaxCondition >= lmax) inv(i) = 1.0 / lambda(i);
      Eigen::Matrix3d cov = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
      fit.covariance = 0.5 * (cov + cov.transpose());
    }
  }
  return fit;
}

std::string to_string(CiMethod m) { return m == CiMethod::delta ? "delta" : "bootstrap"; }

double normal_critical_value(double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) throw DomainError("confidence must lie in (0,1)");
  return boost::math::quantile(boost::math::normal_distribution<double>{}, 1.0 - (1.0 - confidence) / 2.0);
}

double return_level_variance(const GevFit& fit, double return_period) {
  const Eigen::Vector3d g = return_level_gradient(fit.params, return_period);
  return g.dot(fit.covariance * g);
}

ReturnLevelEstimate return_level(const GevFit& fit, double return_period, double confidence) {
  if (!fit.converged) throw DomainError("return level requested from a non-converged fit");
  if (!(return_period > 1.0)) throw DomainError("return period must exceed 1 year");
  const double z = normal_critical_value(confidence);

  ReturnLevelEstimate rl;
  rl.return_period = return_period;
  rl.confidence = confidence;
  rl.method = CiMethod::delta;
  rl.level = gev_quantile(1.0 - 1.0 / return_period, fit.params);
  const double var = return_level_variance(fit, return_period);
  if (var < 0.0 || !std::isfinite(var)) {
    rl.ci_valid = false;
    rl.ci_low = rl.ci_high = rl.level;
    return rl;
  }
  const double half = z * std::sqrt(var);
  rl.ci_low = rl.level - half;
  rl.ci_high = rl.level + half;
  return rl;
}

std::vector<double> gev_sample(const GevParams& params, std::size_t n, std::uint64_t seed) {
  validate(params);
  if (n == 0) throw DomainError("sample size must be positive");
  Rng rng(seed);
  std::vector<double> out(n);
  for (double& x : out) x = gev_quantile(rng.uniform(), params);
  return out;
}

}  // namespace ensx
