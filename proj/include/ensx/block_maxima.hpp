#pragma once

#include <compare>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ensx/daily_series.hpp"
#include "ensx/gev_fit.hpp"
#include "ensx/ks.hpp"

namespace ensx {

struct MaximaEntry {
  std::string member_id;
  int year = 0;
  double maximum = 0.0;
  auto operator<=>(const MaximaEntry&) const = default;
};

// Annual maxima of d-day accumulations for one cell; entries keep the
// member they came from.
struct BlockMaximaSeries {
  std::string cell_id;
  int duration_days = 1;
  std::vector<MaximaEntry> entries;

  std::vector<double> values() const;
  std::vector<std::string> member_ids() const;
  // Entries of one member, in stored order.
  BlockMaximaSeries member(const std::string& member_id) const;
  bool operator==(const BlockMaximaSeries&) const = default;
};

struct MaximaOptions {
  YearStart year_start;
  // Minimum fraction of a block's days that must be present.
  double coverage = 0.90;
};

// Rolling d-day sums over calendar-contiguous windows; each output value is
// dated by its window's last day. Gaps break windows.
DailySeries accumulate_duration(const DailySeries& series, int d);

struct AnnualMaximumPosition {
  int year = 0;
  // Index into the input series of the maximising window's end date.
  std::size_t end_index = 0;
  double maximum = 0.0;
};

// One position per block year that meets the coverage rule; windows are
// assigned to the year of their end date. Ties keep the earliest window.
std::vector<AnnualMaximumPosition> annual_maximum_positions(const DailySeries& series, int d,
                                                            const MaximaOptions& options = {});

// Throws FitError when no year meets the coverage rule.
BlockMaximaSeries annual_maxima(const DailySeries& series, int d, const MaximaOptions& options = {});

// Multiset union ordered by (member_id, year). Throws MismatchError for
// mixed cells or durations, or a repeated (member, year).
BlockMaximaSeries concatenate_maxima(std::span<const BlockMaximaSeries> parts);

// Members of one cell.
struct EnsembleCollection {
  std::vector<DailySeries> members;

  // Throws MismatchError unless members share cell_id and have unique ids.
  static EnsembleCollection make(std::vector<DailySeries> members);
  std::size_t n_members() const { return members.size(); }
};

struct PooledMoments {
  double mean = 0.0;
  double std_dev = 0.0;
  // Empty when the pooled variance is zero.
  std::optional<double> lag1_autocorr;
  std::size_t n_points = 0;
  std::size_t n_lag_pairs = 0;
};

// Mean and standard deviation over all points; lag-1 autocorrelation from
// adjacent pairs within each member only,
//   r1 = sum_pairs (x_t - m)(x_{t+1} - m) / sum_all (x - m)^2.
// Members shorter than two points add to the moments but not to the pairs.
PooledMoments pooled_moments(std::span<const std::vector<double>> members);
PooledMoments pooled_moments(const EnsembleCollection& collection);

struct ConcatenatedFit {
  GevFit fit;
  std::vector<ReturnLevelEstimate> levels;
  // KS of each member's maxima against the pooled fit, by member order.
  std::vector<std::pair<std::string, KsResult>> member_ks;
  bool heterogeneous = false;
  std::vector<std::string> warnings;
};

// concatenate_maxima -> fit_gev_mle -> return_level. A heterogeneity
// warning is raised when more than half the members reject the pooled fit.
// Throws FitError when the pooled fit does not converge.
ConcatenatedFit fit_concatenated(std::span<const BlockMaximaSeries> parts, std::span<const double> return_periods,
                                 double confidence = 0.95, double ks_alpha = 0.05);

}  // namespace ensx
