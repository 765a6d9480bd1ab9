#include "ensx/convective.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>

#include "ensx/error.hpp"
#include "ensx/hypothesis.hpp"
#include "ensx/random.hpp"

namespace ensx {

std::vector<LatitudeBand> make_bands(double lower, double upper, double width) {
  if (!(width > 0.0) || !(upper > lower)) throw ConfigError("invalid latitude band layout");
  std::vector<LatitudeBand> bands;
  const auto n = static_cast<int>(std::ceil((upper - lower) / width - 1e-9));
  for (int i = 0; i < n; ++i)
    bands.push_back({lower + width * i, std::min(upper, lower + width * (i + 1))});
  return bands;
}

ExtremeDefinition parse_extreme_definition(std::string_view text) {
  if (text == "amp") return ExtremeDefinition::amp;
  if (text == "p99") return ExtremeDefinition::p99;
  throw ConfigError("unknown extreme definition '" + std::string(text) + "'");
}

BoundTest parse_bound_test(std::string_view text) {
  if (text == "permutation") return BoundTest::permutation;
  if (text == "bootstrap-welch" || text == "bootstrap_welch") return BoundTest::bootstrap_welch;
  throw ConfigError("unknown bound test '" + std::string(text) + "'");
}

std::string to_string(BoundTest test) {
  return test == BoundTest::permutation ? "permutation" : "bootstrap-welch";
}

namespace {

struct Event {
  double convective;
  double total;
};

std::vector<std::size_t> extreme_days(const DailySeries& total, const BandOptions& options) {
  std::vector<std::size_t> days;
  if (options.extreme == ExtremeDefinition::amp) {
    for (const auto& p : annual_maximum_positions(total, 1, options.maxima)) days.push_back(p.end_index);
  } else {
    const double threshold = quantile(total.values, 0.99);
    for (std::size_t i = 0; i < total.size(); ++i)
      if (total.values[i] >= threshold && total.values[i] > 0.0) days.push_back(i);
  }
  return days;
}

std::vector<double> fractions(const std::vector<Event>& events, std::span<const std::size_t> order,
                              std::span<const std::size_t> counts) {
  std::vector<double> out;
  out.reserve(counts.size());
  std::size_t k = 0;
  for (std::size_t c : counts) {
    double conv = 0.0;
    double tot = 0.0;
    for (std::size_t i = 0; i < c; ++i, ++k) {
      conv += events[order[k]].convective;
      tot += events[order[k]].total;
    }
    out.push_back(conv / tot);
  }
  return out;
}

}  // namespace

BandFractionStats convective_fraction_bands(std::span<const ConvectivePair> pairs,
                                            std::span<const LatitudeBand> bands,
                                            const std::map<std::string, double>& cell_lats,
                                            const BandOptions& options) {
  BandFractionStats out;

  // member -> events per band
  std::map<std::string, std::vector<std::vector<Event>>> by_member;
  std::vector<std::set<std::string>> band_cells(bands.size());
  for (const auto& pair : pairs) {
    const auto& total = pair.total;
    const auto& conv = pair.convective;
    if (conv.cell_id != total.cell_id || conv.member_id != total.member_id || conv.dates != total.dates) {
      throw MismatchError("convective and total series differ for " + total.cell_id + "/" + total.member_id);
    }
    const auto lat = cell_lats.find(total.cell_id);
    if (lat == cell_lats.end()) throw DomainError("no latitude for cell " + total.cell_id);
    const auto band = std::find_if(bands.begin(), bands.end(), [&](const LatitudeBand& b) { return b.contains(lat->second); });
    if (band == bands.end()) {
      out.warnings.push_back("cell " + total.cell_id + " lies outside every band");
      continue;
    }
    const auto b = static_cast<std::size_t>(band - bands.begin());
    band_cells[b].insert(total.cell_id);
    auto& per_band = by_member[total.member_id];
    per_band.resize(bands.size());
    for (std::size_t day : extreme_days(total, options)) {
      double c = conv.values[day];
      if (c > total.values[day]) {
        ++out.n_violations;
        c = total.values[day];
      }
      per_band[b].push_back({c, total.values[day]});
    }
  }

  for (std::size_t b = 0; b < bands.size(); ++b) {
    if (band_cells[b].empty()) {
      out.warnings.push_back("band [" + std::to_string(bands[b].lower) + ", " + std::to_string(bands[b].upper) +
                             ") has no cells; skipped");
      continue;
    }
    BandStats stats;
    stats.band = bands[b];
    stats.n_cells = band_cells[b].size();

    std::vector<Event> events;
    std::vector<std::size_t> counts;
    for (const auto& [member, per_band] : by_member) {
      if (per_band.size() <= b || per_band[b].empty()) continue;
      double tot = 0.0;
      for (const auto& e : per_band[b]) tot += e.total;
      if (!(tot > 0.0)) continue;
      stats.member_ids.push_back(member);
      counts.push_back(per_band[b].size());
      events.insert(events.end(), per_band[b].begin(), per_band[b].end());
    }
    if (stats.member_ids.empty()) {
      out.warnings.push_back("band [" + std::to_string(bands[b].lower) + ", " + std::to_string(bands[b].upper) +
                             ") has no extreme events; skipped");
      continue;
    }
    stats.n_events = events.size();

    std::vector<std::size_t> order(events.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    stats.member_fraction = fractions(events, order, counts);
    stats.quartiles = quartiles(stats.member_fraction);
    stats.iqr = stats.quartiles.iqr();

    Rng rng(hash64(options.seed, b));
    if (options.test == BoundTest::permutation) {
      std::size_t at_least = 0;
      const double tol = 1e-12 * std::max(1.0, stats.iqr);
      for (std::size_t r = 0; r < options.resamples; ++r) {
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
        if (quartiles(fractions(events, order, counts)).iqr() >= stats.iqr - tol) ++at_least;
      }
      stats.p_value = static_cast<double>(at_least + 1) / static_cast<double>(options.resamples + 1);
    } else {
      std::vector<double> low(options.resamples);
      std::vector<double> high(options.resamples);
      std::vector<double> pick(stats.member_fraction.size());
      for (std::size_t r = 0; r < options.resamples; ++r) {
        for (double& v : pick) v = stats.member_fraction[rng.below(pick.size())];
        const auto q = quartiles(pick);
        low[r] = q.q25;
        high[r] = q.q75;
      }
      if (std::adjacent_find(low.begin(), low.end(), std::not_equal_to<>()) == low.end() &&
          std::adjacent_find(high.begin(), high.end(), std::not_equal_to<>()) == high.end()) {
        stats.p_value = low.front() == high.front() ? 1.0 : 0.0;
      } else {
        stats.p_value = t_test_independent(low, high).p;
      }
    }
    out.bands.push_back(std::move(stats));
  }
  return out;
}

}  // namespace ensx
