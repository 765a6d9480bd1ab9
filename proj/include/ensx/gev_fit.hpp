#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ensx/gev.hpp"
#include "ensx/nelder_mead.hpp"

namespace ensx {

inline constexpr std::size_t kMinFitSampleSize = 20;

struct GevFit {
  GevParams params;
  // Parameter order (location, scale, shape).
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
  double log_likelihood = 0.0;
  std::size_t n_samples = 0;
  bool converged = false;
  int n_iterations = 0;
  std::vector<std::string> warnings;

  bool operator==(const GevFit& other) const {
    return params == other.params && covariance == other.covariance &&
           log_likelihood == other.log_likelihood && n_samples == other.n_samples &&
           converged == other.converged && n_iterations == other.n_iterations &&
           warnings == other.warnings;
  }
};

struct FitOptions {
  NelderMeadOptions optimizer;
  // Starting point; the Gumbel moment start is used when absent.
  std::optional<GevParams> start;
  // Initial simplex extents in (location, log scale, shape).
  std::optional<Eigen::Vector3d> step;
  bool compute_covariance = true;
};

// Maximum-likelihood GEV fit by Nelder-Mead in (location, log scale, shape).
// The sample is sorted first, so any permutation of the same multiset gives
// a bitwise identical fit. Samples smaller than kMinFitSampleSize are fitted
// but reported as not converged. Throws FitError("zero variance") when all
// values are equal.
GevFit fit_gev_mle(std::span<const double> sample, const FitOptions& options = {});

// Negative-log-likelihood Hessian in (location, scale, shape) by central
// differences with h_i = max(1e-5, 1e-5 |theta_i|). Empty when a stencil
// point leaves the support.
std::optional<Eigen::Matrix3d> gev_nll_hessian(const GevParams& params, std::span<const double> sorted);

enum class CiMethod { delta, bootstrap };

std::string to_string(CiMethod m);

struct ReturnLevelEstimate {
  double return_period = 0.0;
  double level = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double confidence = 0.95;
  CiMethod method = CiMethod::delta;
  // False when the delta-method variance came out negative; the interval
  // then collapses to the point estimate.
  bool ci_valid = true;

  double width() const { return ci_high - ci_low; }
};

// Two-sided standard normal critical value z_{1-(1-confidence)/2}.
double normal_critical_value(double confidence);

// T-year return level with a symmetric delta-method interval. Throws
// DomainError for a non-converged fit or T <= 1.
ReturnLevelEstimate return_level(const GevFit& fit, double return_period, double confidence = 0.95);

// Variance of the T-year return level under the fit's covariance.
double return_level_variance(const GevFit& fit, double return_period);

// n inverse-CDF draws; identical (params, n, seed) give identical output.
std::vector<double> gev_sample(const GevParams& params, std::size_t n, std::uint64_t seed);

}  // namespace ensx
