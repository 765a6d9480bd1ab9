#pragma once

#include <span>
#include <vector>

namespace ensx {

struct KruskalResult {
  double h = 0.0;
  double p = 1.0;
  int df = 0;
};

// Rank-based H with tie correction; p from chi-square with k-1 degrees of
// freedom. Throws DomainError for fewer than two groups, an empty group, or
// all values identical.
KruskalResult kruskal_wallis(std::span<const std::vector<double>> groups);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  double df = 0.0;
};

enum class VarianceModel { welch, pooled };

// Two-sided independent-samples t-test; Welch-Satterthwaite degrees of
// freedom unless the pooled model is requested.
TTestResult t_test_independent(std::span<const double> a, std::span<const double> b,
                               VarianceModel model = VarianceModel::welch);

struct TrendResult {
  double slope = 0.0;
  double intercept = 0.0;
  double t = 0.0;
  double p = 1.0;
  double df = 0.0;
};

// Ordinary least squares y = intercept + slope x with the usual slope t-test.
// Assumes independent residuals.
TrendResult ols_trend(std::span<const double> x, std::span<const double> y);

}  // namespace ensx
