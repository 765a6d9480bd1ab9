#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ensx/block_maxima.hpp"
#include "ensx/gev_fit.hpp"
#include "ensx/ks.hpp"

namespace ensx {

inline const std::vector<int> kDefaultDurations{1, 2, 3, 5, 6, 10};
inline const std::vector<double> kDefaultReturnPeriods{30.0, 100.0};

// ---------------------------------------------------------------------------
// Depth-duration-frequency tables

enum class DdfMode { per_member_average, concatenated };

std::string to_string(DdfMode mode);
DdfMode parse_ddf_mode(std::string_view text);

struct DdfTable {
  std::string cell_or_region;
  std::vector<int> durations;
  std::vector<double> return_periods;  // ascending
  // estimates[duration index][return period index]
  std::vector<std::vector<ReturnLevelEstimate>> estimates;
  DdfMode mode = DdfMode::concatenated;
  // Durations left out of the table, with the reason.
  std::vector<std::pair<int, std::string>> omitted;
};

// For each duration: one pooled fit (concatenated) or one fit per member
// with the cross-member mean of levels and of interval bounds
// (per_member_average). A duration with any non-converged fit is omitted.
DdfTable ddf(const std::map<int, std::vector<BlockMaximaSeries>>& maxima_by_duration,
             std::span<const double> return_periods, DdfMode mode, double confidence = 0.95);

// ---------------------------------------------------------------------------
// Moving windows

struct WindowEstimate {
  int start_year = 0;
  int end_year = 0;  // inclusive
  std::size_t n_maxima = 0;
  std::optional<ReturnLevelEstimate> estimate;
  std::string flag;  // empty when the estimate is usable
};

struct WindowedEstimates {
  int window_length_years = 30;
  int stride = 1;
  double return_period = 100.0;
  std::vector<WindowEstimate> windows;
};

// One GEV fit per window of `window` consecutive years (pooling all members
// present). A window in which some member lacks a year, or whose fit fails,
// is flagged and the sequence continues. Estimates from overlapping windows
// are serially correlated.
WindowedEstimates moving_window_rl(const BlockMaximaSeries& series, int window, int stride, double return_period,
                                   double confidence = 0.95);

// ---------------------------------------------------------------------------
// Regional aggregation

inline constexpr std::string_view kConusRegion = "CONUS";

using RegionMask = std::map<std::string, std::string>;

struct CellResult {
  GevFit fit;
  ReturnLevelEstimate level;
  KsResult ks;
};

struct RegionalSummary {
  std::string region;
  double mean = 0.0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double iqr = 0.0;
  std::size_t n_used = 0;
  std::size_t n_excluded = 0;
};

// Return-level statistics over the region's cells that pass the KS gate.
// kConusRegion selects every masked cell. Throws DomainError when a cell is
// missing from the mask or no cell in the region passes.
RegionalSummary regional_aggregate(const std::map<std::string, CellResult>& per_cell, const RegionMask& mask,
                                   std::string_view region);

// ---------------------------------------------------------------------------
// Temperature scaling

struct YearRange {
  int first = 0;
  int last = 0;  // inclusive
  bool contains(int y) const { return y >= first && y <= last; }
};

struct ScalingInput {
  DailySeries daily;
  std::vector<std::pair<int, double>> annual_temperature;  // (year, K)
};

struct ScalingResult {
  double delta_p999_per_K = 0.0;
  // Empty when either period's GEV fit fails.
  std::optional<double> delta_rl_per_K;
  YearRange ref;
  YearRange future;
  double delta_T = 0.0;
  double p999_ref = 0.0;
  double p999_future = 0.0;
  std::optional<double> rl_ref;
  std::optional<double> rl_future;
  std::vector<std::string> warnings;
};

// Percent change per kelvin, 100 (X_fut - X_ref) / (X_ref (T_fut - T_ref)),
// for the 99.9th percentile of all daily values and the T-year return level
// of each period's annual maxima.
ScalingResult percentile_scaling(const ScalingInput& input, YearRange ref, YearRange future,
                                 double return_period = 100.0, const MaximaOptions& maxima = {});

}  // namespace ensx
