// Acceptance suite: one PASS/FAIL line per criterion. Run with criterion
// numbers as arguments to select a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ensx/analysis.hpp"
#include "ensx/bias_correction.hpp"
#include "ensx/block_maxima.hpp"
#include "ensx/cli/commands.hpp"
#include "ensx/convective.hpp"
#include "ensx/gev.hpp"
#include "ensx/gev_fit.hpp"
#include "ensx/hypothesis.hpp"
#include "ensx/ks.hpp"
#include "ensx/parallel.hpp"
#include "ensx/quantile.hpp"
#include "ensx/random.hpp"
#include "ensx/synth.hpp"

using namespace ensx;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 20240601;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

const GevParams kTruth{20.0, 5.0, 0.1};

SynthSpec maxima_spec(int members, int years, std::uint64_t seed) {
  SynthSpec s;
  s.truth = kTruth;
  s.n_members = members;
  s.n_years = years;
  s.seed = seed;
  return s;
}

// ---------------------------------------------------------------------------

Outcome c1_concatenation_ratio() {
  const auto members = generate_maxima_ensemble(maxima_spec(27, 96, kSeed));
  const auto pooled = concatenate_maxima(members);
  const double concat = return_level(fit_gev_mle(pooled.values()), 100).width();
  std::vector<double> widths(members.size(), std::nan(""));
  parallel_for(members.size(), default_workers(), [&](std::size_t m) {
    const auto f = fit_gev_mle(members[m].values());
    if (f.converged) widths[m] = return_level(f, 100).width();
  });
  std::erase_if(widths, [](double w) { return !std::isfinite(w); });
  const double ratio = concat / mean(widths);
  return {ratio >= 0.10 && ratio <= 0.30,
          "ratio=" + fmt(ratio) + " over " + std::to_string(widths.size()) + "/27 converged members (target [0.10, 0.30])"};
}

Outcome c2_concatenation_curve() {
  std::vector<int> sizes(27);
  std::iota(sizes.begin(), sizes.end(), 1);
  const auto rows = concatenation_curve(maxima_spec(27, 96, kSeed + 1), 100, sizes, 30, hash64(kSeed, 2));
  std::vector<double> k;
  std::vector<double> w;
  for (const auto& r : rows) {
    k.push_back(r.k);
    w.push_back(r.mean_width);
  }
  const double rho = spearman(k, w);
  bool ok = rho <= -0.9;
  std::string detail = "spearman=" + fmt(rho) + " (target <= -0.9)";
  for (int kk : {4, 9, 16, 25}) {
    const double ratio = rows[kk - 1].mean_width / rows[0].mean_width;
    const double factor = ratio * std::sqrt(static_cast<double>(kk));
    ok = ok && factor >= 1.0 / 1.5 && factor <= 1.5;
    detail += "; k=" + std::to_string(kk) + " ratio/k^-1/2=" + fmt(factor);
  }
  return {ok, detail + " (target [0.667, 1.5])"};
}

Outcome c3_mle_consistency() {
  const auto sample = gev_sample(kTruth, 100000, hash64(kSeed, 3));
  const auto f = fit_gev_mle(sample);
  const auto& p = f.params;
  const bool ok = f.converged && p.location >= 19.9 && p.location <= 20.1 && p.scale >= 4.9 && p.scale <= 5.1 &&
                  p.shape >= 0.08 && p.shape <= 0.12;
  return {ok, "mu=" + fmt(p.location, 6) + " sigma=" + fmt(p.scale, 6) + " xi=" + fmt(p.shape, 6) +
                  (f.converged ? "" : " (not converged)")};
}

Outcome c4_ci_oracle() {
  const double truth_rl = gev_quantile(1.0 - 1.0 / 100.0, kTruth);
  constexpr int kReplications = 200;
  constexpr int kCompared = 50;
  std::vector<double> rel;
  int covered = 0;
  int used = 0;
  for (int r = 0; r < kReplications; ++r) {
    const auto sample = gev_sample(kTruth, 1000, hash64(hash64(kSeed, 4), r));
    BootstrapOptions opt;
    opt.resamples = 1000;
    opt.seed = hash64(hash64(kSeed, 40), r);
    const auto boot = bootstrap_ci_oracle(sample, 100, opt).estimate;
    ++used;
    covered += boot.ci_low <= truth_rl && truth_rl <= boot.ci_high;
    if (r < kCompared) {
      const double delta = return_level(fit_gev_mle(sample), 100).width();
      rel.push_back(std::abs(delta - boot.width()) / boot.width());
    }
  }
  const double med = quantile(rel, 0.5);
  const double coverage = static_cast<double>(covered) / used;
  return {med <= 0.25 && coverage >= 0.91 && coverage <= 0.99,
          "median |w_delta-w_boot|/w_boot=" + fmt(med) + " (target <= 0.25); coverage=" + fmt(coverage) + " (" +
              std::to_string(covered) + "/" + std::to_string(used) + ", target [0.91, 0.99])"};
}

Outcome c5_ks_rate() {
  constexpr std::size_t kCells = 1000;
  std::vector<int> rejected(kCells, -1);
  parallel_for(kCells, default_workers(), [&](std::size_t c) {
    const auto sample = gev_sample(kTruth, 96, hash64(hash64(kSeed, 5), c));
    const auto f = fit_gev_mle(sample);
    if (f.converged) rejected[c] = !ks_test(sample, f.params, 0.05).pass;
  });
  const auto fitted = static_cast<std::size_t>(std::count_if(rejected.begin(), rejected.end(), [](int v) { return v >= 0; }));
  const auto n_rej = static_cast<std::size_t>(std::count(rejected.begin(), rejected.end(), 1));
  const double rate = static_cast<double>(n_rej) / static_cast<double>(fitted);
  return {rate <= 0.07 && fitted == kCells,
          "rejection=" + fmt(rate) + " (" + std::to_string(n_rej) + "/" + std::to_string(fitted) +
              " fitted cells, target <= 0.07)"};
}

struct Workspace {
  fs::path dir;
  Workspace() {
    dir = fs::temp_directory_path() / ("ensx_accept_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir);
  }
  ~Workspace() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
};

int cli(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  if (code != 0) std::cerr << "  ensx exited " << code << ": " << err.str();
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

const char* kDailySpec = R"({
  "daily": {"wet_probability": 0.4, "gamma_shape": 0.8, "gamma_scale": 10},
  "temperature": {"base_K": 288, "trend_K_per_year": 0.03},
  "n_members": 27, "n_years": 96, "start_year": 2006, "seed": 606,
  "cells": [{"cell_id": "c0", "lat": 35, "lon": -100}, {"cell_id": "c1", "lat": 42, "lon": -90}]
})";

Outcome c6_pipeline_size() {
  Workspace ws;
  std::ofstream(ws.dir / "spec.json") << kDailySpec;
  const auto data = ws.dir / "data";
  if (cli({"synth", "-s", (ws.dir / "spec.json").string(), "-d", data.string()}) ||
      cli({"--durations", "1", "amax", "-i", (data / "daily.csv").string(), "-o", (ws.dir / "amax.csv").string()}) ||
      cli({"fit", "--concat", "-i", (ws.dir / "amax.csv").string(), "-o", (ws.dir / "fit.json").string()}))
    return {false, "pipeline failed"};
  const auto text = slurp(ws.dir / "fit.json");
  std::set<long> sizes;
  for (std::size_t pos = text.find("\"n_samples\": "); pos != std::string::npos;
       pos = text.find("\"n_samples\": ", pos + 1))
    sizes.insert(std::stol(text.substr(pos + 13)));
  std::string got;
  for (long s : sizes) got += (got.empty() ? "" : ",") + std::to_string(s);
  return {sizes == std::set<long>{2592}, "pooled n_samples={" + got + "} (target 2592)"};
}

Outcome c7_quantile_map() {
  Rng rng(hash64(kSeed, 7));
  DailySeries model{"c0", "model", {}, {}};
  for (int i = 0; i < 20000; ++i) {
    model.dates.push_back(make_date(1980, 1, 1) + std::chrono::days(i));
    model.values.push_back(rng.bernoulli(0.4) ? rng.gamma(0.8, 10.0) : 0.0);
  }
  DailySeries obs = model;
  obs.member_id = "obs";
  for (double& v : obs.values) v = 1.3 * v + 2.0;

  const auto map = build_quantile_map(model, obs);
  const auto corrected = apply_quantile_map(map, model).series;
  double worst = 0.0;
  for (double p : map.probs) {
    const double want = quantile(obs.values, p);
    const double got = quantile(corrected.values, p);
    worst = std::max(worst, std::abs(got - want) / std::abs(want));
  }
  const auto identity = build_quantile_map(model, model);
  const auto same = apply_quantile_map(identity, model).series;
  double ident = 0.0;
  for (std::size_t i = 0; i < same.values.size(); ++i)
    ident = std::max(ident, std::abs(same.values[i] - model.values[i]));
  return {worst <= 0.01 && ident <= 1e-9,
          "max knot error=" + fmt(worst) + " relative (target <= 0.01); identity max |error|=" + fmt(ident) +
              " (target <= 1e-9)"};
}

Outcome c8_moving_window() {
  // Slope test on non-overlapping windows so the OLS independence assumption
  // holds; overlapping stride-1 estimates share 29 of 30 years.
  constexpr std::size_t kTrials = 200;
  std::vector<double> p(kTrials);
  parallel_for(kTrials, default_workers(), [&](std::size_t t) {
    auto spec = maxima_spec(27, 180, hash64(hash64(kSeed, 8), t));
    spec.start_year = 1920;
    const auto pooled = concatenate_maxima(generate_maxima_ensemble(spec));
    const auto w = moving_window_rl(pooled, 30, 30, 100);
    std::vector<double> x;
    std::vector<double> y;
    for (std::size_t i = 0; i < w.windows.size(); ++i)
      if (w.windows[i].estimate) {
        x.push_back(static_cast<double>(i));
        y.push_back(w.windows[i].estimate->level);
      }
    p[t] = x.size() >= 3 ? ols_trend(x, y).p : 0.0;
  });
  const auto flat = static_cast<std::size_t>(std::count_if(p.begin(), p.end(), [](double v) { return v > 0.05; }));
  // Reported only: the same test on overlapping stride-1 windows over 96 years.
  std::vector<double> p1(kTrials);
  parallel_for(kTrials, default_workers(), [&](std::size_t t) {
    const auto pooled = concatenate_maxima(generate_maxima_ensemble(maxima_spec(27, 96, hash64(hash64(kSeed, 81), t))));
    const auto w = moving_window_rl(pooled, 30, 1, 100);
    std::vector<double> x;
    std::vector<double> y;
    for (std::size_t i = 0; i < w.windows.size(); ++i)
      if (w.windows[i].estimate) {
        x.push_back(static_cast<double>(i));
        y.push_back(w.windows[i].estimate->level);
      }
    p1[t] = ols_trend(x, y).p;
  });
  const auto flat1 = std::count_if(p1.begin(), p1.end(), [](double v) { return v > 0.05; });
  const double share = static_cast<double>(flat) / kTrials;

  constexpr std::size_t kDriftTrials = 20;
  std::vector<double> rho(kDriftTrials);
  parallel_for(kDriftTrials, default_workers(), [&](std::size_t t) {
    auto spec = maxima_spec(27, 96, hash64(hash64(kSeed, 80), t));
    spec.location_drift_per_year = 0.1;
    const auto pooled = concatenate_maxima(generate_maxima_ensemble(spec));
    const auto w = moving_window_rl(pooled, 30, 1, 100);
    std::vector<double> x;
    std::vector<double> y;
    for (std::size_t i = 0; i < w.windows.size(); ++i)
      if (w.windows[i].estimate) {
        x.push_back(static_cast<double>(i));
        y.push_back(w.windows[i].estimate->level);
      }
    rho[t] = spearman(x, y);
  });
  const double min_rho = *std::min_element(rho.begin(), rho.end());
  return {share >= 0.90 && min_rho > 0.9,
          "stationary p>0.05 in " + std::to_string(flat) + "/200 trials = " + fmt(share) +
              " (target >= 0.90, 30-year windows at stride 30 over 180 years); drift min spearman over 20 "
              "trials=" + fmt(min_rho) + " (target > 0.9) [stride-1 variant, not scored: p>0.05 in " +
              std::to_string(flat1) + "/200]"};
}

Outcome c9_ddf() {
  SynthSpec spec;
  spec.daily = DailyGenerator{};
  spec.n_members = 27;
  spec.n_years = 96;
  spec.seed = hash64(kSeed, 9);
  spec.cells = {{"c0", 30, -100}, {"c1", 35, -100}, {"c2", 40, -100}, {"c3", 45, -100}};
  std::size_t dominance_violations = 0;
  std::size_t rl_order_violations = 0;
  std::size_t narrower = 0;
  std::size_t compared = 0;
  std::size_t omitted = 0;
  for (std::size_t c = 0; c < spec.cells.size(); ++c) {
    const auto e = generate_daily_ensemble(spec, c);
    std::map<int, std::vector<BlockMaximaSeries>> by_d;
    for (int d : kDefaultDurations) by_d[d].resize(e.total.size());
    parallel_for(e.total.size(), default_workers(), [&](std::size_t m) {
      for (int d : kDefaultDurations) by_d[d][m] = annual_maxima(e.total[m], d);
    });
    for (int d : kDefaultDurations)
      for (std::size_t m = 0; m < e.total.size(); ++m)
        for (std::size_t y = 0; y < by_d[d][m].entries.size(); ++y)
          dominance_violations += by_d[d][m].entries[y].maximum < by_d[1][m].entries[y].maximum;

    const auto concat = ddf(by_d, kDefaultReturnPeriods, DdfMode::concatenated);
    const auto per = ddf(by_d, kDefaultReturnPeriods, DdfMode::per_member_average);
    omitted += concat.omitted.size() + per.omitted.size();
    for (const auto* t : {&concat, &per})
      for (const auto& row : t->estimates)
        for (std::size_t k = 1; k < row.size(); ++k) rl_order_violations += !(row[k].level > row[k - 1].level);
    for (int d : kDefaultDurations) {
      ++compared;
      const auto ic = std::find(concat.durations.begin(), concat.durations.end(), d);
      const auto ip = std::find(per.durations.begin(), per.durations.end(), d);
      if (ic == concat.durations.end() || ip == per.durations.end()) continue;
      const auto& ec = concat.estimates[static_cast<std::size_t>(ic - concat.durations.begin())];
      const auto& ep = per.estimates[static_cast<std::size_t>(ip - per.durations.begin())];
      bool all = true;
      for (std::size_t k = 0; k < ec.size(); ++k) all = all && ec[k].width() < ep[k].width();
      narrower += all;
    }
  }
  const double share = static_cast<double>(narrower) / static_cast<double>(compared);
  return {dominance_violations == 0 && rl_order_violations == 0 && share >= 0.95,
          "dominance violations=" + std::to_string(dominance_violations) +
              "; RL100<=RL30 cells=" + std::to_string(rl_order_violations) + "; concatenated narrower in " +
              std::to_string(narrower) + "/" + std::to_string(compared) + " duration cells = " + fmt(share) +
              " (target >= 0.95); omitted durations=" + std::to_string(omitted)};
}

BandFractionStats band_run(double spread, std::uint64_t seed, BoundTest test = BoundTest::permutation) {
  SynthSpec spec;
  spec.daily = DailyGenerator{};
  spec.convective = ConvectiveGenerator{0.4, 0.0, 37.0, 0.05};
  spec.heterogeneity.fraction_spread = spread;
  spec.n_members = 20;
  spec.n_years = 30;
  spec.seed = seed;
  spec.cells.clear();
  std::map<std::string, double> lats;
  const auto bands = make_bands(25.0, 50.0, 1.0);
  for (std::size_t b = 0; b < bands.size(); ++b)
    for (int c = 0; c < 2; ++c) {
      const std::string id = "b" + std::to_string(b) + "c" + std::to_string(c);
      spec.cells.push_back({id, bands[b].lower + 0.25 + 0.5 * c, -100.0});
      lats[id] = spec.cells.back().lat;
    }
  std::vector<DailyEnsemble> ens(spec.cells.size());
  parallel_for(ens.size(), default_workers(), [&](std::size_t c) { ens[c] = generate_daily_ensemble(spec, c); });
  std::vector<ConvectivePair> pairs;
  for (auto& e : ens)
    for (std::size_t m = 0; m < e.total.size(); ++m) pairs.push_back({std::move(e.convective[m]), std::move(e.total[m])});
  BandOptions opt;
  opt.resamples = 1000;
  opt.seed = hash64(seed, 1);
  opt.test = test;
  return convective_fraction_bands(pairs, bands, lats, opt);
}

Outcome c10_bands() {
  const auto mice = band_run(0.0, hash64(kSeed, 10));
  const auto mme = band_run(0.15, hash64(kSeed, 11));
  const auto count = [](const BandFractionStats& s, bool above) {
    return static_cast<std::size_t>(std::count_if(s.bands.begin(), s.bands.end(), [&](const BandStats& b) {
      return above ? b.p_value > 0.05 : b.p_value < 0.05;
    }));
  };
  const std::size_t a = count(mice, true);
  const std::size_t b = count(mme, false);
  const double sa = static_cast<double>(a) / static_cast<double>(mice.bands.size());
  const double sb = static_cast<double>(b) / static_cast<double>(mme.bands.size());
  // Reported only: the bootstrap-Welch bound comparison.
  const auto mice_w = band_run(0.0, hash64(kSeed, 10), BoundTest::bootstrap_welch);
  const auto mme_w = band_run(0.15, hash64(kSeed, 11), BoundTest::bootstrap_welch);
  return {sa >= 0.90 && sb >= 0.90,
          "homogeneous p>0.05 in " + std::to_string(a) + "/" + std::to_string(mice.bands.size()) +
              " bands; heterogeneous p<0.05 in " + std::to_string(b) + "/" + std::to_string(mme.bands.size()) +
              " bands (target >= 90% each; permutation bound test) [bootstrap-welch variant, not scored: " +
              std::to_string(count(mice_w, true)) + "/" + std::to_string(mice_w.bands.size()) + " and " +
              std::to_string(count(mme_w, false)) + "/" + std::to_string(mme_w.bands.size()) + "]"};
}

Outcome c11_scaling() {
  Rng rng(hash64(kSeed, 12));
  DailySeries s{"c0", "m001", {}, {}};
  for (Date day = make_date(1981, 1, 1); day < make_date(2001, 1, 1); day += std::chrono::days(1)) {
    s.dates.push_back(day);
    s.values.push_back(rng.bernoulli(0.4) ? rng.gamma(0.8, 10.0) : 0.0);
  }
  const std::size_t n = s.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::chrono::year_month_day ymd{s.dates[i]};
    s.dates.push_back(std::chrono::sys_days{std::chrono::year_month_day{ymd.year() + std::chrono::years(80),
                                                                        ymd.month(), ymd.day()}});
    s.values.push_back(1.07 * s.values[i]);
  }
  ScalingInput in{s, {}};
  for (int y = 1981; y <= 2000; ++y) in.annual_temperature.emplace_back(y, 288.0);
  for (int y = 2061; y <= 2080; ++y) in.annual_temperature.emplace_back(y, 289.0);
  const auto r = percentile_scaling(in, {1981, 2000}, {2061, 2080});
  return {std::abs(r.delta_p999_per_K - 7.0) <= 0.1,
          "dP99.9/dT=" + fmt(r.delta_p999_per_K, 10) + " %/K with dT=" + fmt(r.delta_T) + " K (target 7.0 +- 0.1)"};
}

Outcome c12_tests() {
  const std::vector<std::vector<double>> groups{{1, 2, 3}, {4, 5, 6}};
  const auto kw = kruskal_wallis(groups);
  // Brute force: ranks 1..6 without ties.
  double rsum = 0.0;
  for (const auto& g : groups) {
    double r = 0.0;
    for (double v : g) r += v;
    rsum += r * r / static_cast<double>(g.size());
  }
  const double h_brute = 12.0 / (6.0 * 7.0) * rsum - 3.0 * 7.0;

  const std::vector<double> a{2.5, 3.1, 4.7, 1.2, 9.9, 3.3};
  const auto welch = t_test_independent(a, a);
  const auto pooled = t_test_independent(a, a, VarianceModel::pooled);
  const bool ok = std::abs(kw.h - 3.857) <= 0.001 && std::abs(kw.h - h_brute) <= 1e-12 && welch.t == 0.0 &&
                  welch.p == 1.0 && pooled.t == 0.0 && pooled.p == 1.0;
  return {ok, "H=" + fmt(kw.h, 10) + " brute-force H=" + fmt(h_brute, 10) + " (target 3.857 +- 0.001); identical "
                  "samples t=" + fmt(welch.t) + " p=" + fmt(welch.p) + " (welch), t=" + fmt(pooled.t) +
                  " p=" + fmt(pooled.p) + " (pooled)"};
}

Outcome c13_determinism() {
  Workspace ws;
  std::ofstream(ws.dir / "spec.json") << kDailySpec;
  const std::vector<std::string> files{"daily.csv", "maxima.csv", "amax.csv", "amax.csv.meta.json", "fit.json",
                                       "per.json", "rl.csv", "rl.csv.meta.json", "ddf.csv", "window.csv",
                                       "window.csv.meta.json", "scaling.csv", "boot.csv", "temperature.csv"};
  auto pipeline = [&](const std::string& tag, const std::string& workers) -> bool {
    const auto d = ws.dir / tag;
    const auto in = [&](const std::string& f) { return (d / f).string(); };
    const std::vector<std::string> g{"--workers", workers, "--seed", "77"};
    auto with = [&](std::vector<std::string> a) {
      a.insert(a.begin(), g.begin(), g.end());
      return cli(a) == 0;
    };
    const bool ok =
        with({"synth", "-s", (ws.dir / "spec.json").string(), "-d", d.string()}) &&
        with({"amax", "-i", in("daily.csv"), "-o", in("amax.csv")}) &&
        with({"fit", "-i", in("amax.csv"), "-o", in("fit.json")}) &&
        with({"--lenient", "fit", "--per-member", "--duration", "1", "-i", in("amax.csv"), "-o", in("per.json")}) &&
        with({"rl", "-f", in("fit.json"), "-o", in("rl.csv")}) &&
        with({"--bootstrap", "100", "--periods", "100", "rl", "-f", in("fit.json"), "--method", "bootstrap",
              "--maxima", in("amax.csv"), "-o", in("boot.csv")}) &&
        with({"ddf", "-i", in("amax.csv"), "-o", in("ddf.csv")}) &&
        with({"window", "-i", in("amax.csv"), "-o", in("window.csv")}) &&
        with({"--lenient", "scaling", "-i", in("daily.csv"), "-t", in("temperature.csv"), "--ref", "2006-2035",
              "--future", "2071-2100", "-o", in("scaling.csv")});
    for (const auto& f : files) {
      if (f == "maxima.csv") continue;
      if (!fs::exists(d / f)) return false;
    }
    return ok;
  };
  if (!pipeline("serial_a", "1") || !pipeline("serial_b", "1") || !pipeline("parallel", "8"))
    return {false, "pipeline failed"};
  std::size_t compared = 0;
  std::vector<std::string> differ;
  for (const auto& f : files) {
    if (!fs::exists(ws.dir / "serial_a" / f)) continue;
    ++compared;
    const auto ref = slurp(ws.dir / "serial_a" / f);
    if (ref != slurp(ws.dir / "serial_b" / f) || ref != slurp(ws.dir / "parallel" / f)) differ.push_back(f);
  }
  std::string detail = std::to_string(compared) + " artifacts compared across rerun and 1 vs 8 workers";
  for (const auto& f : differ) detail += "; differs: " + f;
  return {differ.empty() && compared > 0, detail};
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;  // 0 = no runtime bound
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "concatenation uncertainty reduction", 60, c1_concatenation_ratio},
      {2, "concatenation monotonicity", 300, c2_concatenation_curve},
      {3, "MLE consistency", 10, c3_mle_consistency},
      {4, "CI oracle agreement", 600, c4_ci_oracle},
      {5, "KS gating rate", 0, c5_ks_rate},
      {6, "concatenation arithmetic", 0, c6_pipeline_size},
      {7, "quantile mapping", 0, c7_quantile_map},
      {8, "moving-window flatness and drift", 0, c8_moving_window},
      {9, "DDF structure", 0, c9_ddf},
      {10, "MICE/MME band signature", 0, c10_bands},
      {11, "scaling identity", 0, c11_scaling},
      {12, "statistical-test values", 0, c12_tests},
      {13, "determinism", 0, c13_determinism},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failed = 0;
  int ran = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.contains(c.id)) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.limit_s == 0 || secs < c.limit_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::string timing = fmt(secs, 3) + " s";
    if (c.limit_s > 0) timing += " (limit " + fmt(c.limit_s) + " s)";
    std::cout << (pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << ": " << o.detail << "; " << timing
              << std::endl;
  }
  std::cout << (ran - failed) << "/" << ran << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
