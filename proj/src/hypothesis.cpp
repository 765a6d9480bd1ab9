#include "ensx/hypothesis.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "ensx/error.hpp"
#include "ensx/quantile.hpp"

namespace ensx {

namespace {

double two_sided_t_p(double t, double df) {
  if (t == 0.0) return 1.0;
  const boost::math::students_t_distribution<double> dist(df);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

}  // namespace

KruskalResult kruskal_wallis(std::span<const std::vector<double>> groups) {
  if (groups.size() < 2) throw DomainError("Kruskal-Wallis needs at least two groups");
  std::vector<double> all;
  for (const auto& g : groups) {
    if (g.empty()) throw DomainError("Kruskal-Wallis group is empty");
    all.insert(all.end(), g.begin(), g.end());
  }
  if (std::all_of(all.begin(), all.end(), [&](double v) { return v == all.front(); })) {
    throw DomainError("Kruskal-Wallis degenerate: all values identical");
  }
  const auto ranks = average_ranks(all);
  const double n = static_cast<double>(all.size());

  double sum_sq = 0.0;
  std::size_t offset = 0;
  for (const auto& g : groups) {
    double r = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) r += ranks[offset + i];
    sum_sq += r * r / static_cast<double>(g.size());
    offset += g.size();
  }
  double h = 12.0 / (n * (n + 1.0)) * sum_sq - 3.0 * (n + 1.0);

  std::map<double, double> ties;
  for (double v : all) ties[v] += 1.0;
  double tie_sum = 0.0;
  for (const auto& [v, t] : ties) tie_sum += t * t * t - t;
  h /= 1.0 - tie_sum / (n * n * n - n);
  h = std::max(h, 0.0);

  KruskalResult r;
  r.h = h;
  r.df = static_cast<int>(groups.size()) - 1;
  r.p = h == 0.0 ? 1.0 : boost::math::gamma_q(0.5 * r.df, 0.5 * h);
  return r;
}

TTestResult t_test_independent(std::span<const double> a, std::span<const double> b, VarianceModel model) {
  if (a.size() < 2 || b.size() < 2) throw DomainError("t-test needs at least two values per sample");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ma = mean(a);
  const double mb = mean(b);
  const double va = variance(a);
  const double vb = variance(b);
  if (va == 0.0 && vb == 0.0) throw DomainError("t-test degenerate: both samples have zero variance");

  TTestResult r;
  if (model == VarianceModel::welch) {
    const double sa = va / na;
    const double sb = vb / nb;
    r.t = (ma - mb) / std::sqrt(sa + sb);
    r.df = (sa + sb) * (sa + sb) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
  } else {
    r.df = na + nb - 2.0;
    const double sp = ((na - 1.0) * va + (nb - 1.0) * vb) / r.df;
    r.t = (ma - mb) / std::sqrt(sp * (1.0 / na + 1.0 / nb));
  }
  r.p = two_sided_t_p(r.t, r.df);
  return r;
}

TrendResult ols_trend(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("trend: x and y differ in length");
  if (x.size() < 3) throw DomainError("trend needs at least three points");
  const double n = static_cast<double>(x.size());
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw DomainError("trend: x is constant");
  TrendResult r;
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  r.df = n - 2.0;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - r.intercept - r.slope * x[i];
    sse += e * e;
  }
  const double se = std::sqrt(sse / r.df / sxx);
  if (se == 0.0) {
    r.t = r.slope == 0.0 ? 0.0 : std::copysign(INFINITY, r.slope);
    r.p = r.slope == 0.0 ? 1.0 : 0.0;
    return r;
  }
  r.t = r.slope / se;
  r.p = two_sided_t_p(r.t, r.df);
  return r;
}

}  // namespace ensx
