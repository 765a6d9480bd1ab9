#pragma once

#include <span>

#include "ensx/gev.hpp"

namespace ensx {

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  bool pass = true;  // p_value > alpha
  double alpha = 0.05;
};

// Survival function of the limiting Kolmogorov distribution,
// P(K > lambda) = 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 lambda^2).
double kolmogorov_sf(double lambda);

// One-sample KS against a fully specified GEV. The p-value comes from the
// asymptotic distribution of sqrt(n) D; with parameters estimated from the
// same sample the test is conservative.
KsResult ks_test(std::span<const double> sample, const GevParams& params, double alpha = 0.05);

// Two-sample KS with the asymptotic p-value of sqrt(nm/(n+m)) D.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b, double alpha = 0.05);

}  // namespace ensx
