#pragma once

#include <span>
#include <vector>

namespace ensx {

struct DensityPoint {
  double x = 0.0;
  double density = 0.0;
};

// Silverman bandwidth 0.9 min(sd, IQR/1.34) n^(-1/5); falls back to sd when
// the IQR is zero.
double silverman_bandwidth(std::span<const double> values);

// Gaussian KDE on a uniform grid over [min - 3h, max + 3h]. Kernel mass
// beyond the grid ends is folded back by normalising the trapezoid integral
// to one. Throws DomainError for fewer than two distinct values.
std::vector<DensityPoint> kde(std::span<const double> values, std::size_t grid_points = 256);

double trapezoid_integral(std::span<const DensityPoint> curve);

}  // namespace ensx
