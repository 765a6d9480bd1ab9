#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ensx/analysis.hpp"
#include "ensx/convective.hpp"
#include "ensx/density.hpp"
#include "ensx/error.hpp"
#include "ensx/hypothesis.hpp"
#include "ensx/random.hpp"
#include "ensx/synth.hpp"
#include "support.hpp"

using namespace ensx;
using ensx::test::consecutive;

namespace {

std::vector<BlockMaximaSeries> members_for(GevParams truth, int n_members, int n_years, std::uint64_t seed) {
  SynthSpec spec;
  spec.truth = truth;
  spec.n_members = n_members;
  spec.n_years = n_years;
  spec.seed = seed;
  return generate_maxima_ensemble(spec);
}

std::map<int, std::vector<BlockMaximaSeries>> by_duration(int n_members, int n_years, std::uint64_t seed) {
  std::map<int, std::vector<BlockMaximaSeries>> out;
  for (int d : kDefaultDurations) {
    auto m = members_for({20.0 + 4.0 * d, 5.0 + 0.5 * d, 0.1}, n_members, n_years, seed + d);
    for (auto& s : m) s.duration_days = d;
    out[d] = std::move(m);
  }
  return out;
}

// Ranks by counting, independent of the library's sort-based ranks.
double brute_force_h(const std::vector<std::vector<double>>& groups) {
  std::vector<double> all;
  for (const auto& g : groups) all.insert(all.end(), g.begin(), g.end());
  const double n = static_cast<double>(all.size());
  auto rank = [&](double v) {
    double less = 0.0;
    double equal = 0.0;
    for (double w : all) {
      less += w < v;
      equal += w == v;
    }
    return less + (equal + 1.0) / 2.0;
  };
  double sum = 0.0;
  for (const auto& g : groups) {
    double r = 0.0;
    for (double v : g) r += rank(v);
    sum += r * r / static_cast<double>(g.size());
  }
  double h = 12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0);
  double ties = 0.0;
  std::vector<double> sorted = all;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    ties += t * t * t - t;
    i = j;
  }
  return h / (1.0 - ties / (n * n * n - n));
}

}  // namespace

TEST_CASE("DDF concatenated levels sit near the truth") {
  const auto input = by_duration(10, 50, 100);
  const std::vector<double> periods{100, 30};
  const auto table = ddf(input, periods, DdfMode::concatenated);
  CHECK(table.return_periods == std::vector<double>{30, 100});
  CHECK(table.durations == kDefaultDurations);
  CHECK(table.omitted.empty());
  CHECK(table.cell_or_region == "c0");
  REQUIRE(table.estimates.size() == kDefaultDurations.size());
  for (std::size_t i = 0; i < table.durations.size(); ++i) {
    const int d = table.durations[i];
    const GevParams truth{20.0 + 4.0 * d, 5.0 + 0.5 * d, 0.1};
    for (std::size_t j = 0; j < periods.size(); ++j) {
      const auto& e = table.estimates[i][j];
      const double se = e.width() / (2.0 * normal_critical_value(0.95));
      CHECK(std::abs(e.level - gev_quantile(1.0 - 1.0 / e.return_period, truth)) <= 2.0 * se);
    }
    CHECK(table.estimates[i][1].level > table.estimates[i][0].level);
  }
}

TEST_CASE("DDF concatenated intervals narrower than per-member average") {
  const auto input = by_duration(27, 40, 200);
  const std::vector<double> periods{30, 100};
  const auto cat = ddf(input, periods, DdfMode::concatenated);
  const auto avg = ddf(input, periods, DdfMode::per_member_average);
  CHECK(avg.mode == DdfMode::per_member_average);
  REQUIRE(avg.estimates.size() == cat.estimates.size());
  for (std::size_t i = 0; i < cat.estimates.size(); ++i)
    for (std::size_t j = 0; j < periods.size(); ++j) {
      CHECK(cat.estimates[i][j].width() < avg.estimates[i][j].width());
      CHECK(avg.estimates[i][j].ci_low <= avg.estimates[i][j].level);
      CHECK(avg.estimates[i][j].ci_high >= avg.estimates[i][j].level);
    }
}

TEST_CASE("DDF omits durations whose fit fails") {
  auto input = by_duration(3, 40, 300);
  // Too few maxima for a converged fit.
  for (auto& s : input[5]) s.entries.resize(5);
  const std::vector<double> periods{30, 100};
  const auto table = ddf(input, periods, DdfMode::concatenated);
  CHECK(std::find(table.durations.begin(), table.durations.end(), 5) == table.durations.end());
  REQUIRE(table.omitted.size() == 1);
  CHECK(table.omitted[0].first == 5);
  const auto per = ddf(input, periods, DdfMode::per_member_average);
  CHECK(per.omitted.size() == 1);
  CHECK(per.estimates.size() == per.durations.size());
  CHECK(parse_ddf_mode("concat") == DdfMode::concatenated);
  CHECK(parse_ddf_mode("per-member") == DdfMode::per_member_average);
  CHECK_THROWS_AS(parse_ddf_mode("median"), ConfigError);
}

TEST_CASE("moving windows") {
  const auto one = members_for({20, 5, 0.1}, 1, 30, 1).front();
  auto w = moving_window_rl(one, 30, 1, 100);
  REQUIRE(w.windows.size() == 1);
  CHECK(w.windows[0].start_year == 2006);
  CHECK(w.windows[0].end_year == 2035);
  CHECK(w.windows[0].n_maxima == 30);
  CHECK(w.windows[0].estimate.has_value());

  const std::vector<BlockMaximaSeries> parts = members_for({20, 5, 0.1}, 3, 60, 2);
  const auto pooled = concatenate_maxima(parts);
  w = moving_window_rl(pooled, 30, 1, 100);
  CHECK(w.windows.size() == 31);
  for (const auto& e : w.windows) {
    CHECK(e.n_maxima == 90);
    CHECK(e.flag.empty());
  }
  CHECK(moving_window_rl(pooled, 30, 10, 100).windows.size() == 4);

  // A missing year flags the windows that contain it.
  auto gappy = pooled;
  std::erase_if(gappy.entries, [](const MaximaEntry& e) { return e.member_id == "m002" && e.year == 2040; });
  w = moving_window_rl(gappy, 30, 1, 100);
  for (const auto& e : w.windows) {
    const bool has = e.start_year <= 2040 && 2040 <= e.end_year;
    CHECK(e.flag.empty() != has);
    CHECK(e.estimate.has_value() != has);
  }
  CHECK_THROWS_AS(moving_window_rl(one, 31, 1, 100), DomainError);
}

TEST_CASE("moving windows follow a location drift") {
  SynthSpec spec;
  spec.truth = GevParams{20, 5, 0.1};
  spec.n_members = 27;
  spec.n_years = 96;
  spec.seed = 77;
  spec.location_drift_per_year = 0.1;
  const auto pooled = concatenate_maxima(generate_maxima_ensemble(spec));
  const auto w = moving_window_rl(pooled, 30, 1, 100);
  std::vector<double> idx;
  std::vector<double> level;
  for (std::size_t i = 0; i < w.windows.size(); ++i) {
    REQUIRE(w.windows[i].estimate);
    idx.push_back(static_cast<double>(i));
    level.push_back(w.windows[i].estimate->level);
  }
  CHECK(spearman(idx, level) > 0.9);
}

TEST_CASE("regional aggregation") {
  std::map<std::string, CellResult> cells;
  RegionMask mask;
  for (int i = 1; i <= 8; ++i) {
    const std::string id = "c" + std::to_string(i);
    CellResult r;
    r.level.level = i;
    r.ks.pass = true;
    cells[id] = r;
    mask[id] = i <= 4 ? "NE" : "SW";
  }
  auto s = regional_aggregate(cells, mask, kConusRegion);
  CHECK(s.iqr == doctest::Approx(3.5));
  CHECK(s.q25 == doctest::Approx(2.75));
  CHECK(s.q75 == doctest::Approx(6.25));
  CHECK(s.median == doctest::Approx(4.5));
  CHECK(s.mean == doctest::Approx(4.5));
  CHECK(s.n_used == 8);
  CHECK(s.n_excluded == 0);

  cells["c9"] = CellResult{};
  cells["c9"].level.level = 1000;
  cells["c9"].ks.pass = false;
  mask["c9"] = "NE";
  s = regional_aggregate(cells, mask, "NE");
  CHECK(s.n_used == 4);
  CHECK(s.n_excluded == 1);
  CHECK(s.mean == doctest::Approx(2.5));
  s = regional_aggregate(cells, mask, kConusRegion);
  CHECK(s.n_used + s.n_excluded == 9);
  CHECK(s.median == doctest::Approx(4.5));

  for (auto& [id, r] : cells)
    if (mask[id] == "SW") r.ks.pass = false;
  CHECK_THROWS_AS(regional_aggregate(cells, mask, "SW"), DomainError);
  mask.erase("c1");
  CHECK_THROWS_AS(regional_aggregate(cells, mask, "NE"), DomainError);
}

TEST_CASE("Kruskal-Wallis") {
  const std::vector<std::vector<double>> g{{1, 2, 3}, {4, 5, 6}};
  auto r = kruskal_wallis(g);
  CHECK(r.h == doctest::Approx(3.857142857142854).epsilon(1e-12));
  CHECK(std::abs(r.h - 3.857) <= 0.001);
  CHECK(r.p == doctest::Approx(0.049534613435626915).epsilon(1e-10));
  CHECK(r.df == 1);
  CHECK(r.h == doctest::Approx(brute_force_h(g)).epsilon(1e-12));

  const std::vector<std::vector<double>> ties{{1, 1, 2}, {2, 3, 3}};
  r = kruskal_wallis(ties);
  CHECK(r.h == doctest::Approx(3.3333333333333295).epsilon(1e-12));
  CHECK(r.p == doctest::Approx(0.06788915486182946).epsilon(1e-10));
  CHECK(r.h == doctest::Approx(brute_force_h(ties)).epsilon(1e-12));

  const std::vector<std::vector<double>> three{{1, 2, 3}, {4, 5, 6}, {2.5, 7, 7}};
  r = kruskal_wallis(three);
  CHECK(r.h == doctest::Approx(4.392156862745097).epsilon(1e-12));
  CHECK(r.p == doctest::Approx(0.11123853367110746).epsilon(1e-10));
  CHECK(r.df == 2);

  const std::vector<std::vector<double>> same{{1, 4, 2}, {1, 4, 2}};
  r = kruskal_wallis(same);
  CHECK(r.h == doctest::Approx(0.0));
  CHECK(r.p == doctest::Approx(1.0));

  Rng rng(4);
  for (int rep = 0; rep < 30; ++rep) {
    std::vector<std::vector<double>> groups(2 + rng.below(3));
    for (auto& v : groups)
      for (std::size_t i = 0; i < 2 + rng.below(8); ++i) v.push_back(std::round(rng.normal() * 3.0));
    const double h = kruskal_wallis(groups).h;
    CHECK(h == doctest::Approx(brute_force_h(groups)).epsilon(1e-10));
    std::reverse(groups.begin(), groups.end());
    CHECK(kruskal_wallis(groups).h == doctest::Approx(h).epsilon(1e-12));
  }

  const std::vector<std::vector<double>> flat{{2, 2}, {2, 2}};
  CHECK_THROWS_AS(kruskal_wallis(flat), DomainError);
  const std::vector<std::vector<double>> lone{{1, 2}};
  CHECK_THROWS_AS(kruskal_wallis(lone), DomainError);
  const std::vector<std::vector<double>> empty{{1, 2}, {}};
  CHECK_THROWS_AS(kruskal_wallis(empty), DomainError);
}

TEST_CASE("t-tests") {
  const std::vector<double> a{1, 2, 3, 4, 5};
  const std::vector<double> b{3, 4, 5, 6, 7};
  auto r = t_test_independent(a, a);
  CHECK(r.t == 0.0);
  CHECK(r.p == doctest::Approx(1.0));

  r = t_test_independent(a, b);
  CHECK(r.t == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(r.df == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(r.p == doctest::Approx(0.08051623795726257).epsilon(1e-10));
  // Hand Welch: means 3 and 5, variances 2.5, se = sqrt(2.5/5 + 2.5/5) = 1.
  CHECK(r.t == doctest::Approx((3.0 - 5.0) / std::sqrt(2.5 / 5 + 2.5 / 5)));
  const auto flipped = t_test_independent(b, a);
  CHECK(flipped.t == doctest::Approx(-r.t));
  CHECK(flipped.p == doctest::Approx(r.p));

  const std::vector<double> c{1.5, 2, 7, 3.1};
  const std::vector<double> d{0.2, 4, 4.4, 9, 12, 3};
  r = t_test_independent(c, d);
  CHECK(r.t == doctest::Approx(-0.9452310373284273).epsilon(1e-12));
  CHECK(r.df == doctest::Approx(7.946610991050458).epsilon(1e-12));
  CHECK(r.p == doctest::Approx(0.37239017639859145).epsilon(1e-10));
  r = t_test_independent(c, d, VarianceModel::pooled);
  CHECK(r.t == doctest::Approx(-0.8460703497179635).epsilon(1e-12));
  CHECK(r.df == 8.0);
  CHECK(r.p == doctest::Approx(0.4220975974605432).epsilon(1e-10));

  Rng rng(6);
  std::vector<double> x(100);
  std::vector<double> y(100);
  for (auto& v : x) v = rng.normal();
  for (auto& v : y) v = 5.0 + rng.normal();
  CHECK(t_test_independent(x, y).p < 1e-10);

  const std::vector<double> k1{2, 2, 2};
  const std::vector<double> k2{3, 3, 3};
  CHECK_THROWS_AS(t_test_independent(k1, k2), DomainError);
  const std::vector<double> one{1};
  CHECK_THROWS_AS(t_test_independent(one, a), DomainError);
}

TEST_CASE("OLS trend") {
  const std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8};
  const std::vector<double> y{2.1, 3.9, 6.2, 7.8, 10.1, 12.2, 13.8, 16.1};
  auto r = ols_trend(x, y);
  CHECK(r.slope == doctest::Approx(1.9976190476190478).epsilon(1e-12));
  CHECK(r.intercept == doctest::Approx(0.0357142857142847).epsilon(1e-9));
  CHECK(r.t == doctest::Approx(71.85565196160536).epsilon(1e-10));
  CHECK(r.p == doctest::Approx(4.888933612552949e-10).epsilon(1e-6));
  CHECK(r.df == 6.0);
  const std::vector<double> y2{3, 1, 4, 1, 5, 9, 2, 6};
  r = ols_trend(x, y2);
  CHECK(r.slope == doctest::Approx(0.5357142857142857).epsilon(1e-12));
  CHECK(r.t == doctest::Approx(1.3310347641241704).epsilon(1e-10));
  CHECK(r.p == doctest::Approx(0.23151983207369453).epsilon(1e-9));
}

TEST_CASE("percentile scaling") {
  Rng rng(12);
  DailySeries s = consecutive({}, make_date(1981, 1, 1));
  for (Date day = make_date(1981, 1, 1); day < make_date(2001, 1, 1); day += std::chrono::days(1)) {
    s.dates.push_back(day);
    s.values.push_back(rng.bernoulli(0.4) ? rng.gamma(0.8, 10.0) : 0.0);
  }
  const std::size_t n_hist = s.size();
  for (std::size_t i = 0; i < n_hist; ++i) {
    const std::chrono::year_month_day ymd{s.dates[i]};
    const std::chrono::year_month_day fut{ymd.year() + std::chrono::years(80), ymd.month(), ymd.day()};
    s.dates.push_back(std::chrono::sys_days{fut});
    s.values.push_back(s.values[i] * 1.07);
  }
  ScalingInput in;
  in.daily = s;
  for (int y = 1981; y <= 2000; ++y) in.annual_temperature.emplace_back(y, 288.0);
  for (int y = 2061; y <= 2080; ++y) in.annual_temperature.emplace_back(y, 289.0);
  auto r = percentile_scaling(in, {1981, 2000}, {2061, 2080});
  CHECK(r.delta_T == doctest::Approx(1.0));
  CHECK(r.delta_p999_per_K == doctest::Approx(7.0).epsilon(1e-9));
  REQUIRE(r.delta_rl_per_K);
  CHECK(*r.delta_rl_per_K == doctest::Approx(7.0).epsilon(1e-3));

  ScalingInput same = in;
  for (std::size_t i = n_hist; i < same.daily.size(); ++i) same.daily.values[i] /= 1.07;
  r = percentile_scaling(same, {1981, 2000}, {2061, 2080});
  CHECK(r.delta_p999_per_K == doctest::Approx(0.0));

  ScalingInput flat = in;
  for (auto& [y, t] : flat.annual_temperature) t = 288.0;
  CHECK_THROWS_AS(percentile_scaling(flat, {1981, 2000}, {2061, 2080}), DomainError);
  CHECK_THROWS_AS(percentile_scaling(in, {1981, 2000}, {2061, 2090}), DomainError);
}

TEST_CASE("kernel density") {
  Rng rng(15);
  std::vector<double> x(10000);
  for (auto& v : x) v = rng.normal();
  const auto curve = kde(x);
  CHECK(curve.size() == 256);
  CHECK(trapezoid_integral(curve) == doctest::Approx(1.0).epsilon(1e-3));
  double nearest = 1e9;
  double at0 = 0.0;
  for (const auto& p : curve) {
    CHECK(p.density >= 0.0);
    if (std::abs(p.x) < nearest) {
      nearest = std::abs(p.x);
      at0 = p.density;
    }
  }
  CHECK(std::abs(at0 - 1.0 / std::sqrt(2.0 * std::numbers::pi)) <= 0.1 * 0.3989);

  const std::vector<double> sym{-3, -1, -0.5, 0, 0.5, 1, 3};
  const auto c = kde(sym, 101);
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(c[i].x == doctest::Approx(-c[c.size() - 1 - i].x).epsilon(1e-12));
    CHECK(c[i].density == doctest::Approx(c[c.size() - 1 - i].density).epsilon(1e-10));
  }
  CHECK(trapezoid_integral(c) == doctest::Approx(1.0).epsilon(1e-3));

  const std::vector<double> tied{1, 1, 1, 1, 2};
  CHECK(silverman_bandwidth(tied) > 0.0);
  CHECK(trapezoid_integral(kde(tied)) == doctest::Approx(1.0).epsilon(1e-3));
  const std::vector<double> flat{4, 4, 4};
  CHECK_THROWS_AS(kde(flat), DomainError);
}

namespace {

struct BandSetup {
  std::vector<ConvectivePair> pairs;
  std::map<std::string, double> lats;
  std::vector<LatitudeBand> bands;
};

BandSetup band_setup(double base, double noise, double spread, std::uint64_t seed, int members = 10) {
  SynthSpec spec;
  spec.daily = DailyGenerator{};
  spec.convective = ConvectiveGenerator{base, 0.0, 37.0, noise};
  spec.heterogeneity.fraction_spread = spread;
  spec.n_members = members;
  spec.n_years = 30;
  spec.seed = seed;
  spec.cells.clear();
  BandSetup out;
  out.bands = make_bands(30.0, 34.0, 1.0);
  for (int b = 0; b < 4; ++b)
    for (int c = 0; c < 2; ++c) {
      const std::string id = "b" + std::to_string(b) + "c" + std::to_string(c);
      spec.cells.push_back({id, 30.25 + b + 0.5 * c, -100.0});
      out.lats[id] = spec.cells.back().lat;
    }
  for (std::size_t c = 0; c < spec.cells.size(); ++c) {
    auto e = generate_daily_ensemble(spec, c);
    for (std::size_t m = 0; m < e.total.size(); ++m) out.pairs.push_back({e.convective[m], e.total[m]});
  }
  return out;
}

}  // namespace

TEST_CASE("convective fraction degenerate cases") {
  for (double f : {1.0, 0.5}) {
    const auto s = band_setup(f, 0.0, 0.0, 3, 4);
    BandOptions opt;
    opt.resamples = 50;
    const auto r = convective_fraction_bands(s.pairs, s.bands, s.lats, opt);
    REQUIRE(r.bands.size() == 4);
    CHECK(r.n_violations == 0);
    for (const auto& b : r.bands) {
      CHECK(b.n_cells == 2);
      CHECK(b.member_ids.size() == 4);
      CHECK(b.n_events == 4 * 2 * 30);
      for (double v : b.member_fraction) CHECK(v == doctest::Approx(f).epsilon(1e-12));
      CHECK(b.iqr == doctest::Approx(0.0).epsilon(1e-12));
      CHECK(b.quartiles.q25 <= b.quartiles.q50);
      CHECK(b.quartiles.q50 <= b.quartiles.q75);
    }
  }
}

TEST_CASE("convective fraction bands: MICE and MME signatures") {
  BandOptions opt;
  opt.resamples = 200;
  const auto mice_setup = band_setup(0.4, 0.05, 0.0, 5);
  const auto mice = convective_fraction_bands(mice_setup.pairs, mice_setup.bands, mice_setup.lats, opt);
  const auto mme_setup = band_setup(0.4, 0.05, 0.15, 5);
  const auto mme = convective_fraction_bands(mme_setup.pairs, mme_setup.bands, mme_setup.lats, opt);
  REQUIRE(mice.bands.size() == 4);
  REQUIRE(mme.bands.size() == 4);
  for (std::size_t b = 0; b < 4; ++b) {
    CHECK(mice.bands[b].p_value > 0.05);
    CHECK(mme.bands[b].p_value < 0.05);
    CHECK(mme.bands[b].iqr > mice.bands[b].iqr);
    for (double v : mme.bands[b].member_fraction) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("convective fraction band bookkeeping") {
  auto s = band_setup(0.4, 0.05, 0.0, 8, 3);
  s.pairs.front().convective.values[s.pairs.front().total.size() / 2] = 1e6;
  s.lats["b3c1"] = 50.0;
  BandOptions opt;
  opt.resamples = 20;
  opt.extreme = ExtremeDefinition::p99;
  auto bands = s.bands;
  bands.push_back({40.0, 41.0});
  const auto r = convective_fraction_bands(s.pairs, bands, s.lats, opt);
  CHECK(r.bands.size() == 4);
  CHECK(r.warnings.size() >= 2);
  CHECK(r.bands[3].n_cells == 1);

  opt.test = BoundTest::bootstrap_welch;
  const auto w = convective_fraction_bands(s.pairs, s.bands, s.lats, opt);
  CHECK(w.bands.size() == 4);
  CHECK(parse_bound_test("bootstrap-welch") == BoundTest::bootstrap_welch);
  CHECK(parse_bound_test("permutation") == BoundTest::permutation);
  CHECK_THROWS_AS(parse_bound_test("x"), ConfigError);
  CHECK(parse_extreme_definition("p99") == ExtremeDefinition::p99);
  CHECK_THROWS_AS(parse_extreme_definition("top"), ConfigError);

  auto bad = s.pairs;
  bad[0].convective.cell_id = "elsewhere";
  CHECK_THROWS_AS(convective_fraction_bands(bad, s.bands, s.lats, opt), MismatchError);
}
