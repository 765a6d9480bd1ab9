#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ensx/block_maxima.hpp"
#include "ensx/quantile.hpp"

namespace ensx {

// Convective and total daily precipitation of one member at one cell.
// Identity (cell, member) is taken from `total`.
struct ConvectivePair {
  DailySeries convective;
  DailySeries total;
};

struct LatitudeBand {
  double lower = 0.0;  // inclusive
  double upper = 0.0;  // exclusive
  bool contains(double lat) const { return lat >= lower && lat < upper; }
};

// Contiguous bands of `width` degrees covering [lower, upper).
std::vector<LatitudeBand> make_bands(double lower, double upper, double width);

enum class ExtremeDefinition {
  amp,  // each cell-year's annual-maximum day of total precipitation
  p99,  // days with total at or above the series' 99th percentile
};

ExtremeDefinition parse_extreme_definition(std::string_view text);

enum class BoundTest {
  // Extreme days reassigned to members at random, member event counts kept;
  // p is the share of reassignments with an IQR at least the observed one.
  permutation,
  // Members resampled with replacement; Welch t-test of the replicate q25
  // bounds against the replicate q75 bounds.
  bootstrap_welch,
};

BoundTest parse_bound_test(std::string_view text);
std::string to_string(BoundTest test);

struct BandOptions {
  ExtremeDefinition extreme = ExtremeDefinition::amp;
  BoundTest test = BoundTest::permutation;
  std::size_t resamples = 1000;
  std::uint64_t seed = 0;
  MaximaOptions maxima;
};

struct BandStats {
  LatitudeBand band;
  std::size_t n_cells = 0;
  std::size_t n_events = 0;
  std::vector<std::string> member_ids;
  // Sum of convective over sum of total on the member's extreme days.
  std::vector<double> member_fraction;
  Quartiles quartiles;
  double iqr = 0.0;
  double p_value = 1.0;
};

struct BandFractionStats {
  std::vector<BandStats> bands;
  // Days on which convective exceeded total (clipped to total).
  std::size_t n_violations = 0;
  std::vector<std::string> warnings;
};

BandFractionStats convective_fraction_bands(std::span<const ConvectivePair> pairs,
                                            std::span<const LatitudeBand> bands,
                                            const std::map<std::string, double>& cell_lats,
                                            const BandOptions& options = {});

}  // namespace ensx
