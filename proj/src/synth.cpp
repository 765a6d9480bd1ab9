#include "ensx/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>

#include "ensx/error.hpp"
#include "ensx/quantile.hpp"
#include "ensx/random.hpp"

namespace ensx {

namespace {

// Stream tags inside one member.
constexpr std::uint64_t kHeterogeneityStream = 0x4845;
constexpr std::uint64_t kDailyStream = 0x4441;
constexpr std::uint64_t kConvectiveStream = 0x434f;
constexpr std::uint64_t kTemperatureStream = 0x5445;

struct MemberShift {
  double location = 0.0;
  double scale = 0.0;
  double shape = 0.0;
  double fraction = 0.0;
};

// A member's perturbation is shared by every cell.
MemberShift member_shift(const SynthSpec& spec, std::size_t member_index) {
  Rng rng(hash64(hash64(spec.seed, kHeterogeneityStream), member_index));
  const auto& h = spec.heterogeneity;
  MemberShift s;
  s.location = h.location_spread * (2.0 * rng.uniform() - 1.0);
  s.scale = h.scale_spread * (2.0 * rng.uniform() - 1.0);
  s.shape = h.shape_spread * (2.0 * rng.uniform() - 1.0);
  s.fraction = h.fraction_spread * (2.0 * rng.uniform() - 1.0);
  return s;
}

}  // namespace

void SynthSpec::validate() const {
  if (n_members < 1) throw ConfigError("synth: n_members must be >= 1");
  if (n_years < 1) throw ConfigError("synth: n_years must be >= 1");
  if (!truth && !daily) throw ConfigError("synth: need a maxima truth or a daily generator");
  if (truth && !is_valid(*truth)) throw ConfigError("synth: invalid GEV truth");
  if (daily) {
    const auto& d = *daily;
    if (!(d.wet_probability >= 0.0 && d.wet_probability <= 1.0)) throw ConfigError("synth: wet_probability outside [0,1]");
    if (!(d.gamma_shape > 0.0) || !(d.gamma_scale > 0.0)) throw ConfigError("synth: gamma parameters must be > 0");
    if (!(std::abs(d.seasonal_amplitude) < 1.0)) throw ConfigError("synth: |seasonal_amplitude| must be < 1");
  }
  if (convective && !(convective->noise_sd >= 0.0)) throw ConfigError("synth: noise_sd must be >= 0");
  if (cells.empty()) throw ConfigError("synth: no grid cells");
  std::set<std::string> ids;
  for (const auto& c : cells)
    if (!ids.insert(c.cell_id).second) throw ConfigError("synth: duplicate cell " + c.cell_id);
  if (truth) {
    for (int m = 0; m < n_members; ++m) {
      for (std::size_t c = 0; c < cells.size(); ++c)
        if (!is_valid(member_truth(*this, c, static_cast<std::size_t>(m))))
          throw ConfigError("synth: heterogeneity produces an invalid member truth");
    }
  }
}

std::string member_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "m%03d", index + 1);
  return buf;
}

std::uint64_t member_seed(const SynthSpec& spec, std::size_t cell_index, std::size_t member_index) {
  return hash64(hash64(spec.seed, cell_index), member_index);
}

GevParams member_truth(const SynthSpec& spec, std::size_t /*cell_index*/, std::size_t member_index) {
  if (!spec.truth) throw ConfigError("synth: no maxima truth");
  const MemberShift s = member_shift(spec, member_index);
  GevParams p = *spec.truth;
  p.location += s.location;
  p.scale *= 1.0 + s.scale;
  p.shape += s.shape;
  return p;
}

std::vector<BlockMaximaSeries> generate_maxima_ensemble(const SynthSpec& spec, std::size_t cell_index) {
  spec.validate();
  if (!spec.truth) throw ConfigError("synth: maxima ensemble needs a GEV truth");
  if (cell_index >= spec.cells.size()) throw DomainError("synth: cell index out of range");
  std::vector<BlockMaximaSeries> out;
  out.reserve(static_cast<std::size_t>(spec.n_members));
  for (int m = 0; m < spec.n_members; ++m) {
    const auto mi = static_cast<std::size_t>(m);
    const GevParams p = member_truth(spec, cell_index, mi);
    Rng rng(member_seed(spec, cell_index, mi));
    BlockMaximaSeries s{spec.cells[cell_index].cell_id, 1, {}};
    s.entries.reserve(static_cast<std::size_t>(spec.n_years));
    const std::string id = member_name(m);
    for (int y = 0; y < spec.n_years; ++y) {
      GevParams py = p;
      py.location += spec.location_drift_per_year * p.scale * y;
      s.entries.push_back({id, spec.start_year + y, gev_quantile(rng.uniform(), py)});
    }
    out.push_back(std::move(s));
  }
  return out;
}

DailyEnsemble generate_daily_ensemble(const SynthSpec& spec, std::size_t cell_index) {
  spec.validate();
  if (!spec.daily) throw ConfigError("synth: daily ensemble needs a daily generator");
  if (cell_index >= spec.cells.size()) throw DomainError("synth: cell index out of range");
  const auto& gen = *spec.daily;
  const GridCell& cell = spec.cells[cell_index];
  const Date first = make_date(spec.start_year, 1, 1);
  const Date end = make_date(spec.start_year + spec.n_years, 1, 1);

  DailyEnsemble out;
  for (int m = 0; m < spec.n_members; ++m) {
    const auto mi = static_cast<std::size_t>(m);
    const std::uint64_t seed = member_seed(spec, cell_index, mi);
    Rng rng(hash64(seed, kDailyStream));
    DailySeries total{cell.cell_id, member_name(m), {}, {}};
    const auto n_days = static_cast<std::size_t>((end - first).count());
    total.dates.reserve(n_days);
    total.values.reserve(n_days);
    for (Date d = first; d < end; d += std::chrono::days{1}) {
      double v = 0.0;
      if (rng.bernoulli(gen.wet_probability)) {
        const double doy = static_cast<double>((d - make_date(year_of(d), 1, 1)).count());
        const double season = 1.0 + gen.seasonal_amplitude * std::sin(2.0 * std::numbers::pi * (doy - 105.0) / 365.25);
        v = rng.gamma(gen.gamma_shape, gen.gamma_scale) * season;
      }
      total.dates.push_back(d);
      total.values.push_back(v);
    }

    if (spec.convective) {
      const auto& cg = *spec.convective;
      const double base = cg.base_fraction + cg.lat_slope * (cell.lat - cg.reference_lat) +
                          member_shift(spec, mi).fraction;
      Rng crng(hash64(seed, kConvectiveStream));
      DailySeries conv{cell.cell_id, total.member_id, total.dates, {}};
      conv.values.reserve(total.size());
      for (double v : total.values) {
        const double noise = cg.noise_sd > 0.0 ? cg.noise_sd * crng.normal() : 0.0;
        conv.values.push_back(v * std::clamp(base + noise, 0.0, 1.0));
      }
      out.convective.push_back(std::move(conv));
    }
    if (spec.temperature) {
      const auto& tg = *spec.temperature;
      Rng trng(hash64(seed, kTemperatureStream));
      std::vector<std::pair<int, double>> temps;
      for (int y = 0; y < spec.n_years; ++y) {
        const double noise = tg.noise_sd > 0.0 ? tg.noise_sd * trng.normal() : 0.0;
        temps.emplace_back(spec.start_year + y, tg.base_K + tg.trend_K_per_year * y + noise);
      }
      out.temperature.push_back(std::move(temps));
    }
    out.total.push_back(std::move(total));
  }
  return out;
}

BootstrapEstimate bootstrap_ci_oracle(std::span<const double> sample, double return_period,
                                      const BootstrapOptions& options) {
  if (options.resamples < 2) throw DomainError("bootstrap needs at least two resamples");
  GevFit fit;
  try {
    fit = fit_gev_mle(sample);
  } catch (const FitError& e) {
    throw DomainError(std::string("bootstrap precondition: ") + e.what());
  }
  if (!fit.converged) throw DomainError("bootstrap precondition: original fit did not converge");
  const double prob = 1.0 - 1.0 / return_period;
  const double level = gev_quantile(prob, fit.params);

  // Refits start at the original estimate with a simplex about two
  // standard errors wide.
  FitOptions refit;
  refit.start = fit.params;
  refit.compute_covariance = false;
  const Eigen::Vector3d se = fit.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  refit.step = Eigen::Vector3d(std::max(2.0 * se(0), 1e-3 * fit.params.scale),
                               std::max(2.0 * se(1) / fit.params.scale, 1e-3), std::max(2.0 * se(2), 1e-3));

  std::vector<double> levels(options.resamples, std::numeric_limits<double>::quiet_NaN());
  parallel_for(options.resamples, options.workers, [&](std::size_t b) {
    const auto draw = gev_sample(fit.params, sample.size(), hash64(options.seed, b));
    try {
      const GevFit f = fit_gev_mle(draw, refit);
      if (f.converged) levels[b] = gev_quantile(prob, f.params);
    } catch (const FitError&) {
    }
  });
  std::vector<double> ok;
  for (double v : levels)
    if (std::isfinite(v)) ok.push_back(v);

  BootstrapEstimate out;
  out.n_failed = options.resamples - ok.size();
  if (static_cast<double>(out.n_failed) > options.max_failure_fraction * static_cast<double>(options.resamples)) {
    throw FitError("bootstrap: " + std::to_string(out.n_failed) + " of " + std::to_string(options.resamples) +
                   " refits failed");
  }
  std::sort(ok.begin(), ok.end());
  const double alpha = 1.0 - options.confidence;
  out.estimate.return_period = return_period;
  out.estimate.level = level;
  out.estimate.confidence = options.confidence;
  out.estimate.method = CiMethod::bootstrap;
  out.estimate.ci_low = quantile_sorted(ok, alpha / 2.0);
  out.estimate.ci_high = quantile_sorted(ok, 1.0 - alpha / 2.0);
  return out;
}

std::vector<CurveRow> concatenation_curve(const SynthSpec& spec, double return_period,
                                          std::span<const int> subset_sizes, std::size_t repeats,
                                          std::uint64_t seed, double confidence, unsigned workers) {
  const auto members = generate_maxima_ensemble(spec);
  const auto n = static_cast<int>(members.size());
  if (repeats < 1) throw DomainError("concatenation curve needs at least one repeat");

  struct Job {
    std::size_t row;
    std::vector<std::size_t> subset;
  };
  std::vector<Job> jobs;
  std::vector<CurveRow> rows;
  for (int k : subset_sizes) {
    if (k < 1 || k > n) throw DomainError("subset size " + std::to_string(k) + " outside 1.." + std::to_string(n));
    const std::size_t row = rows.size();
    CurveRow r;
    r.k = k;
    rows.push_back(std::move(r));
    if (k == 1) {
      for (std::size_t m = 0; m < members.size(); ++m) jobs.push_back({row, {m}});
    } else if (k == n) {
      std::vector<std::size_t> all(members.size());
      std::iota(all.begin(), all.end(), std::size_t{0});
      jobs.push_back({row, all});
    } else {
      Rng rng(hash64(seed, static_cast<std::uint64_t>(k)));
      for (std::size_t r = 0; r < repeats; ++r) {
        std::vector<std::size_t> idx(members.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        for (std::size_t i = 0; i < static_cast<std::size_t>(k); ++i)
          std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
        idx.resize(static_cast<std::size_t>(k));
        std::sort(idx.begin(), idx.end());
        jobs.push_back({row, idx});
      }
    }
  }

  std::vector<double> widths(jobs.size(), std::numeric_limits<double>::quiet_NaN());
  parallel_for(jobs.size(), workers, [&](std::size_t j) {
    std::vector<BlockMaximaSeries> parts;
    for (std::size_t m : jobs[j].subset) parts.push_back(members[m]);
    try {
      const GevFit fit = fit_gev_mle(concatenate_maxima(parts).values());
      if (fit.converged) widths[j] = return_level(fit, return_period, confidence).width();
    } catch (const FitError&) {
    }
  });

  for (std::size_t j = 0; j < jobs.size(); ++j) {
    CurveRow& row = rows[jobs[j].row];
    if (std::isfinite(widths[j])) {
      row.widths.push_back(widths[j]);
    } else {
      ++row.n_failed;
    }
  }
  for (auto& row : rows) {
    row.n_fits = row.widths.size();
    if (row.widths.empty()) throw FitError("every fit failed for subset size " + std::to_string(row.k));
    std::vector<double> sorted = row.widths;
    std::sort(sorted.begin(), sorted.end());
    row.mean_width = mean(row.widths);
    row.sd_width = row.widths.size() > 1 ? std_dev(row.widths) : 0.0;
    row.min_width = sorted.front();
    row.median_width = quantile_sorted(sorted, 0.5);
    row.max_width = sorted.back();
  }
  return rows;
}

}  // namespace ensx
