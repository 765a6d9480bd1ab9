#include "ensx/density.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ensx/error.hpp"
#include "ensx/quantile.hpp"

namespace ensx {

double silverman_bandwidth(std::span<const double> values) {
  const double sd = std_dev(values);
  const double spread = quartiles(values).iqr() / 1.34;
  const double s = spread > 0.0 ? std::min(sd, spread) : sd;
  return 0.9 * s * std::pow(static_cast<double>(values.size()), -0.2);
}

double trapezoid_integral(std::span<const DensityPoint> curve) {
  double total = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i)
    total += 0.5 * (curve[i].density + curve[i - 1].density) * (curve[i].x - curve[i - 1].x);
  return total;
}

std::vector<DensityPoint> kde(std::span<const double> values, std::size_t grid_points) {
  if (values.size() < 2) throw DomainError("KDE needs at least two values");
  if (grid_points < 2) throw DomainError("KDE grid needs at least two points");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (*lo == *hi) throw DomainError("KDE degenerate: all values identical");

  const double h = silverman_bandwidth(values);
  const double start = *lo - 3.0 * h;
  const double stop = *hi + 3.0 * h;
  const double dx = (stop - start) / static_cast<double>(grid_points - 1);
  const double norm = 1.0 / (static_cast<double>(values.size()) * h * std::sqrt(2.0 * std::numbers::pi));

  std::vector<DensityPoint> curve(grid_points);
  for (std::size_t g = 0; g < grid_points; ++g) {
    const double x = g + 1 == grid_points ? stop : start + dx * static_cast<double>(g);
    double s = 0.0;
    for (double v : values) {
      const double u = (x - v) / h;
      s += std::exp(-0.5 * u * u);
    }
    curve[g] = {x, s * norm};
  }
  const double mass = trapezoid_integral(curve);
  for (auto& p : curve) p.density /= mass;
  return curve;
}

}  // namespace ensx
