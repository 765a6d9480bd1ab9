#include "ensx/block_maxima.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "ensx/error.hpp"

namespace ensx {

std::vector<double> BlockMaximaSeries::values() const {
  std::vector<double> v;
  v.reserve(entries.size());
  for (const auto& e : entries) v.push_back(e.maximum);
  return v;
}

std::vector<std::string> BlockMaximaSeries::member_ids() const {
  std::vector<std::string> ids;
  for (const auto& e : entries)
    if (std::find(ids.begin(), ids.end(), e.member_id) == ids.end()) ids.push_back(e.member_id);
  return ids;
}

BlockMaximaSeries BlockMaximaSeries::member(const std::string& member_id) const {
  BlockMaximaSeries out{cell_id, duration_days, {}};
  for (const auto& e : entries)
    if (e.member_id == member_id) out.entries.push_back(e);
  return out;
}

DailySeries accumulate_duration(const DailySeries& series, int d) {
  if (d < 1) throw DomainError("duration must be at least one day");
  if (d == 1) return series;
  DailySeries out{series.cell_id, series.member_id, {}, {}};
  const auto span = static_cast<std::size_t>(d);
  for (std::size_t i = span - 1; i < series.size(); ++i) {
    const std::size_t first = i + 1 - span;
    if ((series.dates[i] - series.dates[first]).count() != d - 1) continue;
    double sum = 0.0;
    for (std::size_t k = first; k <= i; ++k) sum += series.values[k];
    out.dates.push_back(series.dates[i]);
    out.values.push_back(sum);
  }
  return out;
}

std::vector<AnnualMaximumPosition> annual_maximum_positions(const DailySeries& series, int d,
                                                            const MaximaOptions& options) {
  if (d < 1) throw DomainError("duration must be at least one day");
  std::map<int, std::size_t> present;
  for (Date date : series.dates) ++present[block_year(date, options.year_start)];

  std::set<int> covered;
  for (const auto& [year, count] : present) {
    const auto [lo, hi] = block_bounds(year, options.year_start);
    const double days = static_cast<double>((hi - lo).count());
    if (static_cast<double>(count) >= options.coverage * days) covered.insert(year);
  }

  // Index of each window end in the original series.
  const auto span = static_cast<std::size_t>(d);
  std::map<int, AnnualMaximumPosition> best;
  for (std::size_t i = span - 1; i < series.size(); ++i) {
    const std::size_t first = i + 1 - span;
    if ((series.dates[i] - series.dates[first]).count() != d - 1) continue;
    const int year = block_year(series.dates[i], options.year_start);
    if (!covered.contains(year)) continue;
    double sum = 0.0;
    for (std::size_t k = first; k <= i; ++k) sum += series.values[k];
    auto it = best.find(year);
    if (it == best.end()) {
      best.emplace(year, AnnualMaximumPosition{year, i, sum});
    } else if (sum > it->second.maximum) {
      it->second = {year, i, sum};
    }
  }
  std::vector<AnnualMaximumPosition> out;
  out.reserve(best.size());
  for (const auto& [year, pos] : best) out.push_back(pos);
  return out;
}

BlockMaximaSeries annual_maxima(const DailySeries& series, int d, const MaximaOptions& options) {
  const auto positions = annual_maximum_positions(series, d, options);
  if (positions.empty()) {
    throw FitError("series " + series.cell_id + "/" + series.member_id + ": no year meets the coverage rule");
  }
  BlockMaximaSeries out{series.cell_id, d, {}};
  out.entries.reserve(positions.size());
  for (const auto& p : positions) out.entries.push_back({series.member_id, p.year, p.maximum});
  return out;
}

BlockMaximaSeries concatenate_maxima(std::span<const BlockMaximaSeries> parts) {
  if (parts.empty()) throw DomainError("nothing to concatenate");
  BlockMaximaSeries out{parts.front().cell_id, parts.front().duration_days, {}};
  for (const auto& p : parts) {
    if (p.cell_id != out.cell_id) throw MismatchError("cannot concatenate cells " + out.cell_id + " and " + p.cell_id);
    if (p.duration_days != out.duration_days) throw MismatchError("cannot concatenate different durations");
    out.entries.insert(out.entries.end(), p.entries.begin(), p.entries.end());
  }
  std::sort(out.entries.begin(), out.entries.end());
  for (std::size_t i = 1; i < out.entries.size(); ++i) {
    const auto& a = out.entries[i - 1];
    const auto& b = out.entries[i];
    if (a.member_id == b.member_id && a.year == b.year) {
      throw MismatchError("duplicate maximum for member " + a.member_id + " year " + std::to_string(a.year));
    }
  }
  return out;
}

EnsembleCollection EnsembleCollection::make(std::vector<DailySeries> members) {
  std::set<std::string> ids;
  for (const auto& m : members) {
    if (m.cell_id != members.front().cell_id) throw MismatchError("ensemble members span several cells");
    if (!ids.insert(m.member_id).second) throw MismatchError("duplicate member id " + m.member_id);
  }
  return EnsembleCollection{std::move(members)};
}

PooledMoments pooled_moments(std::span<const std::vector<double>> members) {
  PooledMoments pm;
  double sum = 0.0;
  bool any_pairs = false;
  for (const auto& m : members) {
    pm.n_points += m.size();
    for (double v : m) sum += v;
    if (m.size() >= 2) {
      any_pairs = true;
      pm.n_lag_pairs += m.size() - 1;
    }
  }
  if (!any_pairs) throw DomainError("pooled moments need a member with at least two points");
  pm.mean = sum / static_cast<double>(pm.n_points);

  double ss = 0.0;
  double cross = 0.0;
  for (const auto& m : members) {
    for (std::size_t t = 0; t < m.size(); ++t) {
      const double a = m[t] - pm.mean;
      ss += a * a;
      if (t + 1 < m.size()) cross += a * (m[t + 1] - pm.mean);
    }
  }
  pm.std_dev = std::sqrt(ss / static_cast<double>(pm.n_points - 1));
  if (ss > 0.0) pm.lag1_autocorr = std::clamp(cross / ss, -1.0, 1.0);
  return pm;
}

PooledMoments pooled_moments(const EnsembleCollection& collection) {
  std::vector<std::vector<double>> values;
  values.reserve(collection.members.size());
  for (const auto& m : collection.members) values.push_back(m.values);
  return pooled_moments(values);
}

ConcatenatedFit fit_concatenated(std::span<const BlockMaximaSeries> parts, std::span<const double> return_periods,
                                 double confidence, double ks_alpha) {
  const BlockMaximaSeries pooled = concatenate_maxima(parts);
  const std::vector<double> sample = pooled.values();

  ConcatenatedFit out;
  out.fit = fit_gev_mle(sample);
  if (!out.fit.converged) {
    std::string why = out.fit.warnings.empty() ? "optimizer failure" : out.fit.warnings.front();
    throw FitError("pooled fit for cell " + pooled.cell_id + " did not converge: " + why);
  }
  for (double t : return_periods) out.levels.push_back(return_level(out.fit, t, confidence));

  std::size_t rejected = 0;
  for (const auto& id : pooled.member_ids()) {
    const auto member_values = pooled.member(id).values();
    const KsResult ks = ks_test(member_values, out.fit.params, ks_alpha);
    if (!ks.pass) ++rejected;
    out.member_ks.emplace_back(id, ks);
  }
  if (2 * rejected > out.member_ks.size()) {
    out.heterogeneous = true;
    out.warnings.push_back("heterogeneous members: " + std::to_string(rejected) + " of " +
                           std::to_string(out.member_ks.size()) + " reject the pooled fit");
  }
  return out;
}

}  // namespace ensx
