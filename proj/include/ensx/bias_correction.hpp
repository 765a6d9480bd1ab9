#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ensx/daily_series.hpp"

namespace ensx {

// Empirical quantile map for one cell (optionally one calendar month).
struct QuantileMap {
  std::string cell_id;
  std::vector<double> probs;
  std::vector<double> model_quantiles;
  std::vector<double> obs_quantiles;
  Date train_start{};
  Date train_end{};  // inclusive
  // 1..12 for a month-stratified map.
  std::optional<unsigned> month;

  // probs strictly increasing in (0,1); knot lists nondecreasing and of
  // matching length. Throws InputError.
  void validate() const;
  // Corrected value for v, before clipping at zero.
  double map_value(double v) const;
  bool operator==(const QuantileMap&) const = default;
};

struct TrainingWindow {
  Date start;
  Date end;  // inclusive
};

inline constexpr std::size_t kMinTrainingDays = 365;

// Knots at probabilities k/(n_quantiles+1), k = 1..n_quantiles, from the
// type-7 empirical quantiles of each side over the training window (by
// default the overlap of the two date ranges). Model members are pooled.
// Throws FitError when either side has fewer than kMinTrainingDays values in
// the window.
QuantileMap build_quantile_map(std::span<const DailySeries> model_hist, const DailySeries& obs,
                               std::size_t n_quantiles = 99,
                               std::optional<TrainingWindow> window = std::nullopt,
                               std::optional<unsigned> month = std::nullopt);
QuantileMap build_quantile_map(const DailySeries& model_hist, const DailySeries& obs,
                               std::size_t n_quantiles = 99,
                               std::optional<TrainingWindow> window = std::nullopt);

// Twelve maps, one per calendar month.
std::vector<QuantileMap> build_monthly_quantile_maps(std::span<const DailySeries> model_hist,
                                                     const DailySeries& obs, std::size_t n_quantiles = 99,
                                                     std::optional<TrainingWindow> window = std::nullopt);

struct CorrectedSeries {
  DailySeries series;
  // Values that came out negative and were set to zero.
  std::size_t n_clipped = 0;
};

// Maps each value through the piecewise-linear knot function, with
// additive-offset tails beyond the outer knots. Throws MismatchError when
// the series belongs to another cell.
CorrectedSeries apply_quantile_map(const QuantileMap& map, const DailySeries& series);
// Selects the map of each value's calendar month.
CorrectedSeries apply_quantile_maps(std::span<const QuantileMap> monthly, const DailySeries& series);

}  // namespace ensx
