#pragma once

// Synthetic ensembles with known truth, and the Monte-Carlo oracles that
// check the estimation pipeline against them.
//
// Seeds: the stream for member m of cell c is
//   hash64(hash64(seed, c), m)
// and replicate r of a bootstrap or subset experiment uses hash64(seed, r).
// Member heterogeneity draws come from hash64(hash64(seed, 0x4845), m), so a
// member is perturbed alike in every cell.
// All generators are pure functions of their spec.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ensx/block_maxima.hpp"
#include "ensx/convective.hpp"
#include "ensx/gev_fit.hpp"
#include "ensx/parallel.hpp"

namespace ensx {

struct DailyGenerator {
  double wet_probability = 0.4;
  double gamma_shape = 0.8;
  double gamma_scale = 10.0;  // mm
  // Multiplicative seasonal factor 1 + amplitude sin(2 pi (doy - 105) / 365.25).
  double seasonal_amplitude = 0.0;
};

struct ConvectiveGenerator {
  double base_fraction = 0.4;
  // Fraction change per degree north of reference_lat.
  double lat_slope = 0.0;
  double reference_lat = 37.0;
  // Standard deviation of the daily additive fraction noise.
  double noise_sd = 0.05;
};

struct TemperatureGenerator {
  double base_K = 288.0;
  double trend_K_per_year = 0.03;
  double noise_sd = 0.0;
};

// Per-member perturbations (MME analogues). Each member draws u in [-1, 1]
// per parameter and shifts: location + location_spread u,
// scale (1 + scale_spread u), shape + shape_spread u,
// convective fraction + fraction_spread u.
struct Heterogeneity {
  double location_spread = 0.0;
  double scale_spread = 0.0;
  double shape_spread = 0.0;
  double fraction_spread = 0.0;
  bool any() const {
    return location_spread != 0.0 || scale_spread != 0.0 || shape_spread != 0.0 || fraction_spread != 0.0;
  }
};

struct GridCell {
  std::string cell_id;
  double lat = 0.0;
  double lon = 0.0;
};

struct SynthSpec {
  std::optional<GevParams> truth;  // maxima-level generator
  std::optional<DailyGenerator> daily;
  std::optional<ConvectiveGenerator> convective;
  std::optional<TemperatureGenerator> temperature;
  int n_members = 1;
  int n_years = 1;
  int start_year = 2006;
  std::uint64_t seed = 0;
  // Location drift of the maxima truth, in scale units per year.
  double location_drift_per_year = 0.0;
  Heterogeneity heterogeneity;
  std::vector<GridCell> cells{{"c0", 40.0, -100.0}};

  // Throws ConfigError.
  void validate() const;
};

std::string member_name(int index);
std::uint64_t member_seed(const SynthSpec& spec, std::size_t cell_index, std::size_t member_index);
// Maxima-level truth of one member after heterogeneity.
GevParams member_truth(const SynthSpec& spec, std::size_t cell_index, std::size_t member_index);

// n_members series of n_years i.i.d. draws (plus any configured drift).
std::vector<BlockMaximaSeries> generate_maxima_ensemble(const SynthSpec& spec, std::size_t cell_index = 0);

struct DailyEnsemble {
  std::vector<DailySeries> total;
  std::vector<DailySeries> convective;  // empty unless spec.convective
  // Per member (year, K); empty unless spec.temperature.
  std::vector<std::vector<std::pair<int, double>>> temperature;
};

// Bernoulli wet days with gamma amounts on contiguous calendar years.
DailyEnsemble generate_daily_ensemble(const SynthSpec& spec, std::size_t cell_index = 0);

struct BootstrapOptions {
  std::size_t resamples = 1000;
  double confidence = 0.95;
  std::uint64_t seed = 0;
  unsigned workers = default_workers();
  // Refits may fail on at most this fraction of resamples.
  double max_failure_fraction = 0.10;
};

struct BootstrapEstimate {
  ReturnLevelEstimate estimate;  // method = bootstrap
  std::size_t n_failed = 0;
};

// Parametric bootstrap: fit once, redraw `resamples` samples of the same
// size from the fitted GEV, refit each and take empirical quantiles of the
// refitted return levels. Throws DomainError when the original fit does not
// converge and FitError when too many refits fail.
BootstrapEstimate bootstrap_ci_oracle(std::span<const double> sample, double return_period,
                                      const BootstrapOptions& options = {});

struct CurveRow {
  int k = 0;
  std::size_t n_fits = 0;
  std::size_t n_failed = 0;
  double mean_width = 0.0;
  double sd_width = 0.0;
  double min_width = 0.0;
  double median_width = 0.0;
  double max_width = 0.0;
  std::vector<double> widths;
};

// CI width of the T-year return level against the number of concatenated
// members. k = 1 uses every member on its own, k = n_members the full set,
// and other k use `repeats` random member subsets.
std::vector<CurveRow> concatenation_curve(const SynthSpec& spec, double return_period,
                                          std::span<const int> subset_sizes, std::size_t repeats,
                                          std::uint64_t seed, double confidence = 0.95,
                                          unsigned workers = default_workers());

}  // namespace ensx
