#include "ensx/bias_correction.hpp"

#include <algorithm>
#include <cmath>

#include "ensx/error.hpp"
#include "ensx/quantile.hpp"

namespace ensx {

namespace {

std::vector<double> window_values(const DailySeries& s, const TrainingWindow& w, std::optional<unsigned> month) {
  std::vector<double> out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.dates[i] < w.start || s.dates[i] > w.end) continue;
    if (month && month_of(s.dates[i]) != *month) continue;
    out.push_back(s.values[i]);
  }
  return out;
}

}  // namespace

void QuantileMap::validate() const {
  if (probs.empty()) throw InputError("quantile map " + cell_id + ": no knots");
  if (model_quantiles.size() != probs.size() || obs_quantiles.size() != probs.size()) {
    throw InputError("quantile map " + cell_id + ": knot lists differ in length");
  }
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!(probs[i] > 0.0 && probs[i] < 1.0)) throw InputError("quantile map " + cell_id + ": prob outside (0,1)");
    if (!std::isfinite(model_quantiles[i]) || !std::isfinite(obs_quantiles[i]))
      throw InputError("quantile map " + cell_id + ": non-finite knot");
    if (i > 0) {
      if (!(probs[i] > probs[i - 1])) throw InputError("quantile map " + cell_id + ": probs not increasing");
      if (model_quantiles[i] < model_quantiles[i - 1] || obs_quantiles[i] < obs_quantiles[i - 1])
        throw InputError("quantile map " + cell_id + ": knots not nondecreasing");
    }
  }
  if (month && (*month < 1 || *month > 12)) throw InputError("quantile map " + cell_id + ": month outside 1..12");
}

double QuantileMap::map_value(double v) const {
  const auto& q = model_quantiles;
  const auto& o = obs_quantiles;
  if (v < q.front()) return v + (o.front() - q.front());
  if (v > q.back()) return v + (o.back() - q.back());
  const auto lo = static_cast<std::size_t>(std::lower_bound(q.begin(), q.end(), v) - q.begin());
  if (q[lo] == v) {
    // A run of tied model knots maps to the mean of its obs knots.
    const auto hi = static_cast<std::size_t>(std::upper_bound(q.begin(), q.end(), v) - q.begin());
    double s = 0.0;
    for (std::size_t k = lo; k < hi; ++k) s += o[k];
    return s / static_cast<double>(hi - lo);
  }
  const double frac = (v - q[lo - 1]) / (q[lo] - q[lo - 1]);
  return o[lo - 1] + frac * (o[lo] - o[lo - 1]);
}

QuantileMap build_quantile_map(std::span<const DailySeries> model_hist, const DailySeries& obs,
                               std::size_t n_quantiles, std::optional<TrainingWindow> window,
                               std::optional<unsigned> month) {
  if (model_hist.empty()) throw DomainError("quantile map needs model data");
  if (n_quantiles < 1) throw DomainError("quantile map needs at least one knot");
  for (const auto& m : model_hist) {
    if (m.cell_id != obs.cell_id) throw MismatchError("model cell " + m.cell_id + " vs obs cell " + obs.cell_id);
  }
  if (!window) {
    if (obs.dates.empty()) throw FitError("quantile map " + obs.cell_id + ": empty observations");
    Date lo = obs.dates.front();
    Date hi = obs.dates.back();
    Date mlo = Date::max();
    Date mhi = Date::min();
    for (const auto& m : model_hist) {
      if (m.dates.empty()) continue;
      mlo = std::min(mlo, m.dates.front());
      mhi = std::max(mhi, m.dates.back());
    }
    window = TrainingWindow{std::max(lo, mlo), std::min(hi, mhi)};
  }

  std::vector<double> model_values;
  for (const auto& m : model_hist) {
    const auto v = window_values(m, *window, month);
    model_values.insert(model_values.end(), v.begin(), v.end());
  }
  std::vector<double> obs_values = window_values(obs, *window, month);

  const std::size_t min_days = month ? kMinTrainingDays / 12 : kMinTrainingDays;
  if (model_values.size() < min_days || obs_values.size() < min_days) {
    throw FitError("quantile map " + obs.cell_id + ": insufficient training overlap (" +
                   std::to_string(model_values.size()) + " model, " + std::to_string(obs_values.size()) +
                   " obs values, need " + std::to_string(min_days) + ")");
  }
  std::sort(model_values.begin(), model_values.end());
  std::sort(obs_values.begin(), obs_values.end());

  QuantileMap map;
  map.cell_id = obs.cell_id;
  map.train_start = window->start;
  map.train_end = window->end;
  map.month = month;
  for (std::size_t k = 1; k <= n_quantiles; ++k) {
    const double p = static_cast<double>(k) / static_cast<double>(n_quantiles + 1);
    map.probs.push_back(p);
    map.model_quantiles.push_back(quantile_sorted(model_values, p));
    map.obs_quantiles.push_back(quantile_sorted(obs_values, p));
  }
  return map;
}

QuantileMap build_quantile_map(const DailySeries& model_hist, const DailySeries& obs, std::size_t n_quantiles,
                               std::optional<TrainingWindow> window) {
  return build_quantile_map(std::span<const DailySeries>(&model_hist, 1), obs, n_quantiles, window);
}

std::vector<QuantileMap> build_monthly_quantile_maps(std::span<const DailySeries> model_hist,
                                                     const DailySeries& obs, std::size_t n_quantiles,
                                                     std::optional<TrainingWindow> window) {
  std::vector<QuantileMap> maps;
  for (unsigned m = 1; m <= 12; ++m) maps.push_back(build_quantile_map(model_hist, obs, n_quantiles, window, m));
  return maps;
}

CorrectedSeries apply_quantile_map(const QuantileMap& map, const DailySeries& series) {
  if (map.cell_id != series.cell_id) {
    throw MismatchError("quantile map for cell " + map.cell_id + " applied to cell " + series.cell_id);
  }
  map.validate();
  CorrectedSeries out{series, 0};
  for (double& v : out.series.values) {
    v = map.map_value(v);
    if (v < 0.0) {
      v = 0.0;
      ++out.n_clipped;
    }
  }
  return out;
}

CorrectedSeries apply_quantile_maps(std::span<const QuantileMap> monthly, const DailySeries& series) {
  const QuantileMap* by_month[13] = {};
  for (const auto& m : monthly) {
    if (m.cell_id != series.cell_id) {
      throw MismatchError("quantile map for cell " + m.cell_id + " applied to cell " + series.cell_id);
    }
    if (!m.month) throw InputError("month-stratified correction given an annual map");
    m.validate();
    by_month[*m.month] = &m;
  }
  CorrectedSeries out{series, 0};
  for (std::size_t i = 0; i < out.series.size(); ++i) {
    const QuantileMap* m = by_month[month_of(series.dates[i])];
    if (!m) throw InputError("no quantile map for month " + std::to_string(month_of(series.dates[i])));
    double& v = out.series.values[i];
    v = m->map_value(v);
    if (v < 0.0) {
      v = 0.0;
      ++out.n_clipped;
    }
  }
  return out;
}

}  // namespace ensx
