#pragma once

// Nelder-Mead downhill simplex (standard coefficients: reflection 1,
// expansion 2, contraction 1/2, shrink 1/2).

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include <Eigen/Core>

namespace ensx {

struct NelderMeadOptions {
  int max_iterations = 2000;
  // Stop when (f_worst - f_best) <= tolerance * max(|f_best|, 1).
  double relative_tolerance = 1e-10;
  // Each converged run is restarted from its best vertex this many times at
  // most; a restart that no longer improves ends the search.
  int max_restarts = 2;
};

template <typename Scalar, int N>
struct NelderMeadResult {
  Eigen::Matrix<Scalar, N, 1> argmin;
  Scalar minimum{};
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

template <typename Scalar, int N, typename Objective>
NelderMeadResult<Scalar, N> nelder_mead(Objective&& f, const Eigen::Matrix<Scalar, N, 1>& start,
                                        const Eigen::Matrix<Scalar, N, 1>& step,
                                        const NelderMeadOptions& options = {}) {
  using Vec = Eigen::Matrix<Scalar, N, 1>;
  using std::abs;
  using std::max;

  NelderMeadResult<Scalar, N> result;
  std::array<Vec, N + 1> x;
  std::array<Scalar, N + 1> fx;
  std::array<int, N + 1> order;

  auto eval = [&](const Vec& v) {
    ++result.evaluations;
    return f(v);
  };

  Vec origin = start;
  Vec scale = step;
  for (int round = 0; round <= options.max_restarts; ++round) {
    x[0] = origin;
    fx[0] = eval(x[0]);
    for (int i = 0; i < N; ++i) {
      x[i + 1] = origin;
      x[i + 1](i) += scale(i);
      fx[i + 1] = eval(x[i + 1]);
    }

    bool converged = false;
    while (result.iterations < options.max_iterations) {
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return fx[a] < fx[b]; });
      const int best = order[0];
      const int worst = order[N];
      const int second = order[N - 1];
      if (fx[worst] - fx[best] <= Scalar(options.relative_tolerance) * max(abs(fx[best]), Scalar(1))) {
        converged = true;
        break;
      }
      ++result.iterations;

      Vec centroid = Vec::Zero();
      for (int i = 0; i <= N; ++i)
        if (i != worst) centroid += x[i];
      centroid /= Scalar(N);

      const Vec xr = centroid + (centroid - x[worst]);
      const Scalar fr = eval(xr);
      if (fr < fx[best]) {
        const Vec xe = centroid + Scalar(2) * (centroid - x[worst]);
        const Scalar fe = eval(xe);
        if (fe < fr) {
          x[worst] = xe;
          fx[worst] = fe;
        } else {
          x[worst] = xr;
          fx[worst] = fr;
        }
        continue;
      }
      if (fr < fx[second]) {
        x[worst] = xr;
        fx[worst] = fr;
        continue;
      }
      if (fr < fx[worst]) {
        const Vec xc = centroid + Scalar(0.5) * (xr - centroid);
        const Scalar fc = eval(xc);
        if (fc <= fr) {
          x[worst] = xc;
          fx[worst] = fc;
          continue;
        }
      } else {
        const Vec xc = centroid + Scalar(0.5) * (x[worst] - centroid);
        const Scalar fc = eval(xc);
        if (fc < fx[worst]) {
          x[worst] = xc;
          fx[worst] = fc;
          continue;
        }
      }
      for (int i = 0; i <= N; ++i) {
        if (i == best) continue;
        x[i] = x[best] + Scalar(0.5) * (x[i] - x[best]);
        fx[i] = eval(x[i]);
      }
    }

    const int best = static_cast<int>(std::min_element(fx.begin(), fx.end()) - fx.begin());
    const bool improved = round == 0 || fx[best] < result.minimum -
                                                      Scalar(options.relative_tolerance) *
                                                          max(abs(result.minimum), Scalar(1));
    if (round == 0 || fx[best] < result.minimum) {
      result.argmin = x[best];
      result.minimum = fx[best];
    }
    result.converged = converged;
    if (!converged || !improved) break;
    origin = result.argmin;
    scale = step * Scalar(0.1);
  }
  return result;
}

}  // namespace ensx
