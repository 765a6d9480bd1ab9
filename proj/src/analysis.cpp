#include "ensx/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ensx/error.hpp"
#include "ensx/quantile.hpp"

namespace ensx {

std::string to_string(DdfMode mode) {
  return mode == DdfMode::concatenated ? "concatenated" : "per_member_average";
}

DdfMode parse_ddf_mode(std::string_view text) {
  if (text == "concatenated" || text == "concat") return DdfMode::concatenated;
  if (text == "per_member_average" || text == "per-member") return DdfMode::per_member_average;
  throw ConfigError("unknown DDF mode '" + std::string(text) + "'");
}

namespace {

std::string first_warning(const GevFit& fit) {
  return fit.warnings.empty() ? "fit did not converge" : fit.warnings.front();
}

}  // namespace

DdfTable ddf(const std::map<int, std::vector<BlockMaximaSeries>>& maxima_by_duration,
             std::span<const double> return_periods, DdfMode mode, double confidence) {
  if (maxima_by_duration.empty()) throw DomainError("DDF needs at least one duration");
  if (return_periods.empty()) throw DomainError("DDF needs at least one return period");

  DdfTable table;
  table.mode = mode;
  std::set<double> periods(return_periods.begin(), return_periods.end());
  table.return_periods.assign(periods.begin(), periods.end());

  for (const auto& [duration, parts] : maxima_by_duration) {
    if (parts.empty()) throw DomainError("no maxima for duration " + std::to_string(duration));
    const BlockMaximaSeries pooled = concatenate_maxima(parts);
    if (table.cell_or_region.empty()) table.cell_or_region = pooled.cell_id;
    if (pooled.cell_id != table.cell_or_region) throw MismatchError("DDF inputs span several cells");

    std::vector<ReturnLevelEstimate> row;
    std::string reason;
    try {
      if (mode == DdfMode::concatenated) {
        const GevFit fit = fit_gev_mle(pooled.values());
        if (!fit.converged) {
          reason = first_warning(fit);
        } else {
          for (double t : table.return_periods) row.push_back(return_level(fit, t, confidence));
        }
      } else {
        const auto members = pooled.member_ids();
        std::vector<GevFit> fits;
        for (const auto& id : members) {
          fits.push_back(fit_gev_mle(pooled.member(id).values()));
          if (!fits.back().converged) {
            reason = "member " + id + ": " + first_warning(fits.back());
            break;
          }
        }
        if (reason.empty()) {
          for (double t : table.return_periods) {
            ReturnLevelEstimate avg;
            avg.return_period = t;
            avg.confidence = confidence;
            avg.level = avg.ci_low = avg.ci_high = 0.0;
            for (const auto& f : fits) {
              const auto r = return_level(f, t, confidence);
              avg.level += r.level;
              avg.ci_low += r.ci_low;
              avg.ci_high += r.ci_high;
              avg.ci_valid = avg.ci_valid && r.ci_valid;
            }
            const double m = static_cast<double>(fits.size());
            avg.level /= m;
            avg.ci_low /= m;
            avg.ci_high /= m;
            row.push_back(avg);
          }
        }
      }
    } catch (const FitError& e) {
      reason = e.what();
    }
    if (!reason.empty()) {
      table.omitted.emplace_back(duration, reason);
      continue;
    }
    table.durations.push_back(duration);
    table.estimates.push_back(std::move(row));
  }
  return table;
}

WindowedEstimates moving_window_rl(const BlockMaximaSeries& series, int window, int stride, double return_period,
                                   double confidence) {
  if (window < 1 || stride < 1) throw DomainError("window and stride must be positive");
  if (series.entries.empty()) throw DomainError("moving window over an empty series");

  std::map<std::string, std::set<int>> years_by_member;
  for (const auto& e : series.entries) years_by_member[e.member_id].insert(e.year);
  int first = series.entries.front().year;
  int last = first;
  for (const auto& [id, years] : years_by_member) {
    if (*years.rbegin() - *years.begin() + 1 < window) {
      throw DomainError("member " + id + " spans fewer than " + std::to_string(window) + " years");
    }
    first = std::min(first, *years.begin());
    last = std::max(last, *years.rbegin());
  }

  WindowedEstimates out;
  out.window_length_years = window;
  out.stride = stride;
  out.return_period = return_period;
  for (int start = first; start + window - 1 <= last; start += stride) {
    WindowEstimate w;
    w.start_year = start;
    w.end_year = start + window - 1;
    std::vector<double> sample;
    for (const auto& e : series.entries)
      if (e.year >= w.start_year && e.year <= w.end_year) sample.push_back(e.maximum);
    w.n_maxima = sample.size();

    for (const auto& [id, years] : years_by_member) {
      const auto lo = years.lower_bound(w.start_year);
      const auto hi = years.upper_bound(w.end_year);
      if (std::distance(lo, hi) != window) {
        w.flag = "incomplete window for member " + id;
        break;
      }
    }
    if (w.flag.empty()) {
      try {
        const GevFit fit = fit_gev_mle(sample);
        if (fit.converged) {
          w.estimate = return_level(fit, return_period, confidence);
        } else {
          w.flag = first_warning(fit);
        }
      } catch (const FitError& e) {
        w.flag = e.what();
      }
    }
    out.windows.push_back(std::move(w));
  }
  return out;
}

RegionalSummary regional_aggregate(const std::map<std::string, CellResult>& per_cell, const RegionMask& mask,
                                   std::string_view region) {
  RegionalSummary s;
  s.region = std::string(region);
  std::vector<double> levels;
  for (const auto& [cell, result] : per_cell) {
    const auto it = mask.find(cell);
    if (it == mask.end()) throw DomainError("cell " + cell + " is not covered by the region mask");
    if (region != kConusRegion && it->second != region) continue;
    if (result.ks.pass) {
      levels.push_back(result.level.level);
      ++s.n_used;
    } else {
      ++s.n_excluded;
    }
  }
  if (levels.empty()) throw DomainError("region " + s.region + " has no cell passing the goodness-of-fit gate");
  std::sort(levels.begin(), levels.end());
  s.mean = mean(levels);
  s.q25 = quantile_sorted(levels, 0.25);
  s.median = quantile_sorted(levels, 0.5);
  s.q75 = quantile_sorted(levels, 0.75);
  s.iqr = s.q75 - s.q25;
  return s;
}

namespace {

double period_mean_temperature(const std::vector<std::pair<int, double>>& temps, YearRange r) {
  std::map<int, double> by_year(temps.begin(), temps.end());
  double sum = 0.0;
  for (int y = r.first; y <= r.last; ++y) {
    const auto it = by_year.find(y);
    if (it == by_year.end()) throw DomainError("no temperature for year " + std::to_string(y));
    sum += it->second;
  }
  return sum / static_cast<double>(r.last - r.first + 1);
}

DailySeries restrict_to(const DailySeries& s, YearRange r) {
  DailySeries out{s.cell_id, s.member_id, {}, {}};
  std::set<int> years;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const int y = year_of(s.dates[i]);
    if (!r.contains(y)) continue;
    years.insert(y);
    out.dates.push_back(s.dates[i]);
    out.values.push_back(s.values[i]);
  }
  if (static_cast<int>(years.size()) != r.last - r.first + 1) {
    throw DomainError("daily data do not cover " + std::to_string(r.first) + "-" + std::to_string(r.last));
  }
  return out;
}

double percent_per_kelvin(double ref, double fut, double delta_t) {
  if (ref == 0.0) throw DomainError("reference value is zero");
  return 100.0 * (fut - ref) / (ref * delta_t);
}

}  // namespace

ScalingResult percentile_scaling(const ScalingInput& input, YearRange ref, YearRange future, double return_period,
                                 const MaximaOptions& maxima) {
  if (ref.first > ref.last || future.first > future.last) throw DomainError("empty scaling period");
  ScalingResult r;
  r.ref = ref;
  r.future = future;
  r.delta_T = period_mean_temperature(input.annual_temperature, future) -
              period_mean_temperature(input.annual_temperature, ref);
  if (r.delta_T == 0.0) throw DomainError("temperature change is zero; scaling undefined");

  const DailySeries ref_daily = restrict_to(input.daily, ref);
  const DailySeries fut_daily = restrict_to(input.daily, future);
  r.p999_ref = quantile(ref_daily.values, 0.999);
  r.p999_future = quantile(fut_daily.values, 0.999);
  r.delta_p999_per_K = percent_per_kelvin(r.p999_ref, r.p999_future, r.delta_T);

  auto period_rl = [&](const DailySeries& s) -> std::optional<double> {
    try {
      const GevFit fit = fit_gev_mle(annual_maxima(s, 1, maxima).values());
      if (!fit.converged) {
        r.warnings.push_back("RL fit " + std::to_string(year_of(s.dates.front())) + ": " + first_warning(fit));
        return std::nullopt;
      }
      return gev_quantile(1.0 - 1.0 / return_period, fit.params);
    } catch (const FitError& e) {
      r.warnings.emplace_back(e.what());
      return std::nullopt;
    }
  };
  r.rl_ref = period_rl(ref_daily);
  r.rl_future = period_rl(fut_daily);
  if (r.rl_ref && r.rl_future) r.delta_rl_per_K = percent_per_kelvin(*r.rl_ref, *r.rl_future, r.delta_T);
  return r;
}

}  // namespace ensx
