#include "ensx/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include "CLI11.hpp"
#include "ensx/analysis.hpp"
#include "ensx/bias_correction.hpp"
#include "ensx/block_maxima.hpp"
#include "ensx/cli/artifact.hpp"
#include "ensx/cli/config.hpp"
#include "ensx/cli/csv_io.hpp"
#include "ensx/cli/number_format.hpp"
#include "ensx/convective.hpp"
#include "ensx/density.hpp"
#include "ensx/error.hpp"
#include "ensx/hypothesis.hpp"
#include "ensx/parallel.hpp"
#include "ensx/quantile.hpp"
#include "ensx/random.hpp"
#include "ensx/synth.hpp"

namespace ensx::cli {

namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Shared plumbing

struct Context {
  RunConfig config;
  bool seed_explicit = false;
  std::ostream& out;
  std::ostream& err;

  unsigned workers() const { return config.workers == 0 ? default_workers() : config.workers; }
  MaximaOptions maxima() const { return {parse_year_start(config.year_start), config.coverage}; }
};

std::string opt_number(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

std::vector<InputDigest> digests(const std::vector<fs::path>& inputs) {
  std::vector<InputDigest> d;
  for (const auto& p : inputs) d.push_back(digest(p));
  return d;
}

Provenance provenance(const Context& ctx, const std::string& command, const std::vector<fs::path>& inputs) {
  return {command, ctx.config.echo(), digests(inputs)};
}

// Writes the CSV produced by `body` to `out` with a meta sidecar, or to
// standard output when no path is given.
void emit_csv(Context& ctx, const std::string& command, const std::optional<fs::path>& out,
              const std::vector<fs::path>& inputs, const std::function<void(std::ostream&)>& body,
              const Json& extra = Json::object()) {
  std::ostringstream text;
  body(text);
  if (!out) {
    ctx.out << text.str();
    return;
  }
  write_text_file(*out, text.str());
  Json meta = provenance_json(provenance(ctx, command, inputs));
  meta["output"] = {{"file", out->filename().string()}, {"sha256", sha256_file(*out)}};
  for (const auto& [k, v] : extra.items()) meta[k] = v;
  write_text_file(meta_sidecar_path(*out), dump_json(meta));
}

void emit_json(Context& ctx, const std::optional<fs::path>& out, const Json& j) {
  if (out) {
    write_text_file(*out, dump_json(j));
  } else {
    ctx.out << dump_json(j);
  }
}

// Reports per-unit failures. Strict mode turns any failure into exit 3
// before the primary output is written.
void settle(Context& ctx, const std::string& command, const std::optional<fs::path>& out,
            const std::vector<ErrorRecord>& errors) {
  for (const auto& e : errors) {
    ctx.err << "warning: " << command << ": ";
    if (!e.cell_id.empty()) ctx.err << e.cell_id;
    if (!e.member_id.empty()) ctx.err << "/" << e.member_id;
    if (e.duration_days) ctx.err << " d=" << e.duration_days;
    if (!e.cell_id.empty()) ctx.err << ": ";
    ctx.err << e.message << "\n";
  }
  if (out) write_errors_sidecar(*out, command, errors);
  if (ctx.config.strict && !errors.empty()) {
    throw EstimationFailure(std::to_string(errors.size()) + " unit(s) failed in strict mode" +
                            (out ? "; see " + errors_sidecar_path(*out).string() : std::string()));
  }
}

std::vector<DailySeries> load_daily(const std::vector<fs::path>& paths) {
  std::vector<DailySeries> all;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& p : paths) {
    for (auto& s : read_daily_csv(p)) {
      if (!seen.insert({s.cell_id, s.member_id}).second)
        throw MismatchError(p.string() + ": series " + s.cell_id + "/" + s.member_id + " appears in several inputs");
      all.push_back(std::move(s));
    }
  }
  std::sort(all.begin(), all.end(), [](const DailySeries& a, const DailySeries& b) {
    return std::tie(a.cell_id, a.member_id) < std::tie(b.cell_id, b.member_id);
  });
  return all;
}

std::vector<BlockMaximaSeries> load_maxima(const std::vector<fs::path>& paths) {
  std::vector<BlockMaximaSeries> all;
  std::set<std::tuple<std::string, int, std::string>> seen;
  for (const auto& p : paths) {
    for (auto& s : read_maxima_csv(p)) {
      const std::string member = s.entries.front().member_id;
      if (!seen.insert({s.cell_id, s.duration_days, member}).second)
        throw MismatchError(p.string() + ": maxima " + s.cell_id + "/" + member + " d=" +
                            std::to_string(s.duration_days) + " appear in several inputs");
      all.push_back(std::move(s));
    }
  }
  std::sort(all.begin(), all.end(), [](const BlockMaximaSeries& a, const BlockMaximaSeries& b) {
    return std::tie(a.cell_id, a.duration_days, a.entries.front().member_id) <
           std::tie(b.cell_id, b.duration_days, b.entries.front().member_id);
  });
  return all;
}

// (cell, duration) -> member series, keys ascending.
std::map<std::pair<std::string, int>, std::vector<BlockMaximaSeries>> group_maxima(
    const std::vector<BlockMaximaSeries>& all) {
  std::map<std::pair<std::string, int>, std::vector<BlockMaximaSeries>> g;
  for (const auto& s : all) g[{s.cell_id, s.duration_days}].push_back(s);
  return g;
}

YearRange parse_year_range(const std::string& text, const std::string& flag) {
  const auto dash = text.find('-', 1);
  long long a = 0;
  long long b = 0;
  if (dash == std::string::npos || !parse_integer(text.substr(0, dash), a) ||
      !parse_integer(text.substr(dash + 1), b) || a > b)
    throw ConfigError(flag + ": expected FIRST-LAST years, got '" + text + "'");
  return {static_cast<int>(a), static_cast<int>(b)};
}

std::vector<int> parse_int_list(const std::string& text, const std::string& flag) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string f;
  while (std::getline(ss, f, ',')) {
    long long v = 0;
    if (!parse_integer(f, v)) throw ConfigError(flag + ": bad integer '" + f + "'");
    out.push_back(static_cast<int>(v));
  }
  if (out.empty()) throw ConfigError(flag + ": empty list");
  return out;
}

std::vector<std::string> rl_header() {
  return {"cell_id", "member_id", "duration_days", "return_period", "level", "ci_low", "ci_high", "confidence",
          "method"};
}

std::vector<std::string> rl_row(const FitRecord& r, const ReturnLevelEstimate& e) {
  return {r.cell_id,
          r.member_id,
          std::to_string(r.duration_days),
          format_number(e.return_period),
          format_number(e.level),
          format_number(e.ci_low),
          format_number(e.ci_high),
          format_number(e.confidence),
          to_string(e.method)};
}

// ---------------------------------------------------------------------------
// amax

struct AmaxArgs {
  std::vector<fs::path> inputs;
  std::optional<fs::path> out;
};

void cmd_amax(Context& ctx, const AmaxArgs& a) {
  const auto series = load_daily(a.inputs);
  for (const auto& s : series) s.validate();
  const auto opts = ctx.maxima();
  struct Job {
    std::size_t series;
    int d;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < series.size(); ++i)
    for (int d : ctx.config.durations) jobs.push_back({i, d});
  std::vector<std::optional<BlockMaximaSeries>> results(jobs.size());
  std::vector<std::string> failures(jobs.size());
  parallel_for(jobs.size(), ctx.workers(), [&](std::size_t j) {
    try {
      results[j] = annual_maxima(series[jobs[j].series], jobs[j].d, opts);
    } catch (const FitError& e) {
      failures[j] = e.what();
    }
  });
  std::vector<ErrorRecord> errors;
  std::vector<BlockMaximaSeries> ok;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const auto& s = series[jobs[j].series];
    if (results[j]) {
      ok.push_back(std::move(*results[j]));
    } else {
      errors.push_back({s.cell_id, s.member_id, jobs[j].d, "annual_maxima", failures[j]});
    }
  }
  settle(ctx, "amax", a.out, errors);
  emit_csv(ctx, "amax", a.out, a.inputs, [&](std::ostream& o) { write_maxima_csv(o, ok); });
}

// ---------------------------------------------------------------------------
// fit

struct FitArgs {
  std::vector<fs::path> inputs;
  std::optional<fs::path> out;
  bool per_member = false;
  std::optional<int> duration;
};

FitRecord fit_record(const RunConfig& cfg, const BlockMaximaSeries& sample, std::string member, std::size_t n_members,
                     std::string& failure) {
  FitRecord r;
  r.cell_id = sample.cell_id;
  r.duration_days = sample.duration_days;
  r.member_id = std::move(member);
  r.n_members = n_members;
  r.fit.params = {std::nan(""), std::nan(""), std::nan("")};
  r.fit.covariance.setConstant(std::nan(""));
  r.fit.log_likelihood = std::nan("");
  r.ks.alpha = cfg.ks_alpha;
  r.ks.statistic = std::nan("");
  r.ks.p_value = std::nan("");
  const auto values = sample.values();
  r.fit.n_samples = values.size();
  try {
    r.fit = fit_gev_mle(values);
  } catch (const FitError& e) {
    failure = e.what();
    return r;
  } catch (const DomainError& e) {
    failure = e.what();
    return r;
  }
  if (!r.fit.converged) {
    failure = r.fit.warnings.empty() ? "fit did not converge" : r.fit.warnings.front();
    return r;
  }
  r.ks = ks_test(values, r.fit.params, cfg.ks_alpha);
  for (double t : cfg.return_periods) r.levels.push_back(return_level(r.fit, t, cfg.confidence));
  return r;
}

void cmd_fit(Context& ctx, const FitArgs& a) {
  auto groups = group_maxima(load_maxima(a.inputs));
  if (a.duration) std::erase_if(groups, [&](const auto& g) { return g.first.second != *a.duration; });
  if (groups.empty()) throw InputError("fit: no maxima" + (a.duration ? " for duration " + std::to_string(*a.duration) : std::string()));

  struct Job {
    const std::vector<BlockMaximaSeries>* parts;
    std::optional<std::size_t> member;  // empty = pooled
  };
  std::vector<Job> jobs;
  for (const auto& [key, parts] : groups) {
    if (a.per_member) {
      for (std::size_t m = 0; m < parts.size(); ++m) jobs.push_back({&parts, m});
    } else {
      jobs.push_back({&parts, std::nullopt});
    }
  }
  std::vector<FitRecord> records(jobs.size());
  std::vector<std::string> failures(jobs.size());
  parallel_for(jobs.size(), ctx.workers(), [&](std::size_t j) {
    const auto& parts = *jobs[j].parts;
    if (jobs[j].member) {
      const auto& s = parts[*jobs[j].member];
      records[j] = fit_record(ctx.config, s, s.entries.front().member_id, 1, failures[j]);
      return;
    }
    const auto pooled = concatenate_maxima(parts);
    records[j] = fit_record(ctx.config, pooled, kPooledMember, parts.size(), failures[j]);
    if (!failures[j].empty()) return;
    std::size_t rejected = 0;
    for (const auto& m : parts) rejected += !ks_test(m.values(), records[j].fit.params, ctx.config.ks_alpha).pass;
    if (2 * rejected > parts.size()) {
      records[j].heterogeneous = true;
      records[j].warnings.push_back("heterogeneous members: " + std::to_string(rejected) + " of " +
                                    std::to_string(parts.size()) + " reject the pooled fit");
    }
  });

  std::vector<ErrorRecord> errors;
  for (std::size_t j = 0; j < jobs.size(); ++j)
    if (!failures[j].empty())
      errors.push_back({records[j].cell_id, records[j].member_id, records[j].duration_days, "fit", failures[j]});
  settle(ctx, "fit", a.out, errors);

  FitArtifact art;
  art.provenance = provenance(ctx, "fit", a.inputs);
  art.mode = a.per_member ? "per_member" : "concatenated";
  art.fits = std::move(records);
  emit_json(ctx, a.out, to_json(art));
}

// ---------------------------------------------------------------------------
// rl

struct RlArgs {
  fs::path fit;
  std::optional<fs::path> out;
  std::string method = "delta";
  std::optional<fs::path> maxima;
};

void cmd_rl(Context& ctx, const RlArgs& a) {
  const auto art = read_fit_artifact(a.fit);
  std::vector<fs::path> inputs{a.fit};
  const bool bootstrap = a.method == "bootstrap";
  if (!bootstrap && a.method != "delta") throw ConfigError("rl: --method must be delta or bootstrap");
  std::map<std::pair<std::string, int>, std::vector<BlockMaximaSeries>> samples;
  if (bootstrap) {
    if (!a.maxima) throw ConfigError("rl: --method bootstrap needs --maxima with the fitted samples");
    inputs.push_back(*a.maxima);
    samples = group_maxima(load_maxima({*a.maxima}));
  }

  std::vector<ErrorRecord> errors;
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < art.fits.size(); ++i) {
    const auto& r = art.fits[i];
    if (!r.fit.converged) {
      errors.push_back({r.cell_id, r.member_id, r.duration_days, "rl", "fit did not converge"});
      continue;
    }
    for (std::size_t k = 0; k < ctx.config.return_periods.size(); ++k) {
      const double t = ctx.config.return_periods[k];
      try {
        if (!bootstrap) {
          rows.push_back(rl_row(r, return_level(r.fit, t, ctx.config.confidence)));
          continue;
        }
        const auto it = samples.find({r.cell_id, r.duration_days});
        if (it == samples.end()) throw InputError("no maxima for this fit in " + a.maxima->string());
        std::vector<double> values;
        for (const auto& s : it->second)
          if (r.member_id == kPooledMember || s.entries.front().member_id == r.member_id) {
            const auto v = s.values();
            values.insert(values.end(), v.begin(), v.end());
          }
        if (values.size() != r.fit.n_samples)
          throw InputError("maxima give " + std::to_string(values.size()) + " values, fit used " +
                           std::to_string(r.fit.n_samples));
        BootstrapOptions opt;
        opt.resamples = static_cast<std::size_t>(ctx.config.bootstrap_resamples);
        opt.confidence = ctx.config.confidence;
        opt.seed = hash64(hash64(ctx.config.seed, i), k);
        opt.workers = ctx.workers();
        rows.push_back(rl_row(r, bootstrap_ci_oracle(values, t, opt).estimate));
      } catch (const FitError& e) {
        errors.push_back({r.cell_id, r.member_id, r.duration_days, "rl", e.what()});
      } catch (const DomainError& e) {
        errors.push_back({r.cell_id, r.member_id, r.duration_days, "rl", e.what()});
      }
    }
  }
  settle(ctx, "rl", a.out, errors);
  emit_csv(ctx, "rl", a.out, inputs, [&](std::ostream& o) {
    write_row(o, rl_header());
    for (const auto& row : rows) write_row(o, row);
  });
}

// ---------------------------------------------------------------------------
// ddf

struct DdfArgs {
  std::vector<fs::path> inputs;
  std::optional<fs::path> out;
  std::string mode = "concatenated";
};

void cmd_ddf(Context& ctx, const DdfArgs& a) {
  const DdfMode mode = parse_ddf_mode(a.mode);
  const auto all = load_maxima(a.inputs);
  std::map<std::string, std::map<int, std::vector<BlockMaximaSeries>>> by_cell;
  for (const auto& s : all) by_cell[s.cell_id][s.duration_days].push_back(s);

  std::vector<ErrorRecord> errors;
  std::vector<std::string> cells;
  std::vector<std::map<int, std::vector<BlockMaximaSeries>>> inputs;
  for (auto& [cell, durations] : by_cell) {
    std::map<int, std::vector<BlockMaximaSeries>> used;
    for (int d : ctx.config.durations) {
      const auto it = durations.find(d);
      if (it == durations.end()) {
        errors.push_back({cell, "", d, "ddf", "no maxima for this duration"});
      } else {
        used[d] = it->second;
      }
    }
    if (used.empty()) continue;
    cells.push_back(cell);
    inputs.push_back(std::move(used));
  }
  std::vector<DdfTable> tables(cells.size());
  parallel_for(cells.size(), ctx.workers(), [&](std::size_t i) {
    tables[i] = ddf(inputs[i], ctx.config.return_periods, mode, ctx.config.confidence);
  });
  for (const auto& t : tables)
    for (const auto& [d, why] : t.omitted) errors.push_back({t.cell_or_region, "", d, "ddf", why});
  std::sort(errors.begin(), errors.end(), [](const ErrorRecord& x, const ErrorRecord& y) {
    return std::tie(x.cell_id, x.duration_days) < std::tie(y.cell_id, y.duration_days);
  });
  settle(ctx, "ddf", a.out, errors);
  emit_csv(ctx, "ddf", a.out, a.inputs, [&](std::ostream& o) {
    write_row(o, {"cell_id", "mode", "duration_days", "return_period", "level", "ci_low", "ci_high", "confidence"});
    for (const auto& t : tables)
      for (std::size_t i = 0; i < t.durations.size(); ++i)
        for (std::size_t k = 0; k < t.return_periods.size(); ++k) {
          const auto& e = t.estimates[i][k];
          write_row(o, {t.cell_or_region, to_string(t.mode), std::to_string(t.durations[i]),
                        format_number(e.return_period), format_number(e.level), format_number(e.ci_low),
                        format_number(e.ci_high), format_number(e.confidence)});
        }
  });
}

// ---------------------------------------------------------------------------
// qmap

struct QmapBuildArgs {
  std::vector<fs::path> model;
  fs::path obs;
  std::optional<fs::path> out;
  bool by_month = false;
  std::optional<std::string> train_start;
  std::optional<std::string> train_end;
};

void cmd_qmap_build(Context& ctx, const QmapBuildArgs& a) {
  const auto model = load_daily(a.model);
  const auto obs = read_daily_csv(a.obs);
  for (const auto& s : model) s.validate();
  std::map<std::string, const DailySeries*> obs_by_cell;
  for (const auto& s : obs) {
    s.validate();
    if (!obs_by_cell.emplace(s.cell_id, &s).second)
      throw InputError(a.obs.string() + ": several observation series for cell " + s.cell_id);
  }
  std::optional<TrainingWindow> window;
  if (a.train_start || a.train_end) {
    if (!a.train_start || !a.train_end) throw ConfigError("qmap build: give both --train-start and --train-end");
    try {
      window = TrainingWindow{parse_date(*a.train_start), parse_date(*a.train_end)};
    } catch (const InputError& e) {
      throw ConfigError(std::string("qmap build: ") + e.what());
    }
    if (window->end < window->start) throw ConfigError("qmap build: training window ends before it starts");
  }
  std::map<std::string, std::vector<DailySeries>> model_by_cell;
  for (const auto& s : model) model_by_cell[s.cell_id].push_back(s);

  std::vector<ErrorRecord> errors;
  std::vector<QuantileMap> maps;
  const auto knots = static_cast<std::size_t>(ctx.config.knots);
  for (const auto& [cell, members] : model_by_cell) {
    const auto it = obs_by_cell.find(cell);
    if (it == obs_by_cell.end()) {
      errors.push_back({cell, "", 0, "qmap", "no observations for this cell"});
      continue;
    }
    try {
      if (a.by_month) {
        for (auto& m : build_monthly_quantile_maps(members, *it->second, knots, window)) maps.push_back(std::move(m));
      } else {
        maps.push_back(build_quantile_map(members, *it->second, knots, window));
      }
    } catch (const FitError& e) {
      errors.push_back({cell, "", 0, "qmap", e.what()});
    }
  }
  settle(ctx, "qmap build", a.out, errors);
  std::vector<fs::path> inputs = a.model;
  inputs.push_back(a.obs);
  QuantileMapArtifact art{provenance(ctx, "qmap build", inputs), std::move(maps)};
  emit_json(ctx, a.out, to_json(art));
}

struct QmapApplyArgs {
  fs::path map;
  std::vector<fs::path> inputs;
  std::optional<fs::path> out;
};

void cmd_qmap_apply(Context& ctx, const QmapApplyArgs& a) {
  const auto art = read_quantile_map_artifact(a.map);
  const auto series = load_daily(a.inputs);
  for (const auto& s : series) s.validate();
  std::map<std::string, std::vector<QuantileMap>> by_cell;
  for (const auto& m : art.maps) by_cell[m.cell_id].push_back(m);

  std::vector<ErrorRecord> errors;
  std::vector<DailySeries> corrected;
  Json clipped = Json::array();
  for (const auto& s : series) {
    const auto it = by_cell.find(s.cell_id);
    if (it == by_cell.end()) {
      errors.push_back({s.cell_id, s.member_id, 0, "qmap", "no quantile map for this cell"});
      continue;
    }
    const bool monthly = it->second.front().month.has_value();
    auto c = monthly ? apply_quantile_maps(it->second, s) : apply_quantile_map(it->second.front(), s);
    clipped.push_back({{"cell_id", s.cell_id}, {"member_id", s.member_id}, {"n_clipped", c.n_clipped}});
    corrected.push_back(std::move(c.series));
  }
  settle(ctx, "qmap apply", a.out, errors);
  std::vector<fs::path> inputs{a.map};
  inputs.insert(inputs.end(), a.inputs.begin(), a.inputs.end());
  emit_csv(ctx, "qmap apply", a.out, inputs, [&](std::ostream& o) { write_daily_csv(o, corrected); },
           Json{{"clipped", clipped}});
}

// ---------------------------------------------------------------------------
// window

struct WindowArgs {
  std::vector<fs::path> inputs;
  std::optional<fs::path> out;
  int duration = 1;
  double period = 100.0;
};

void cmd_window(Context& ctx, const WindowArgs& a) {
  auto groups = group_maxima(load_maxima(a.inputs));
  std::erase_if(groups, [&](const auto& g) { return g.first.second != a.duration; });
  if (groups.empty()) throw InputError("window: no maxima for duration " + std::to_string(a.duration));
  std::vector<std::pair<std::string, int>> keys;
  std::vector<BlockMaximaSeries> pooled;
  for (const auto& [key, parts] : groups) {
    keys.push_back(key);
    pooled.push_back(concatenate_maxima(parts));
  }
  std::vector<std::optional<WindowedEstimates>> results(pooled.size());
  std::vector<std::string> failures(pooled.size());
  parallel_for(pooled.size(), ctx.workers(), [&](std::size_t i) {
    try {
      results[i] = moving_window_rl(pooled[i], ctx.config.window, ctx.config.stride, a.period, ctx.config.confidence);
    } catch (const DomainError& e) {
      failures[i] = e.what();
    }
  });

  std::vector<ErrorRecord> errors;
  Json trends = Json::array();
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    if (!results[i]) {
      errors.push_back({keys[i].first, "", keys[i].second, "window", failures[i]});
      continue;
    }
    std::vector<double> idx;
    std::vector<double> level;
    for (std::size_t w = 0; w < results[i]->windows.size(); ++w) {
      const auto& e = results[i]->windows[w];
      if (e.estimate) {
        idx.push_back(static_cast<double>(w));
        level.push_back(e.estimate->level);
      } else if (e.flag.rfind("incomplete", 0) != 0) {
        errors.push_back({keys[i].first, "", keys[i].second, "window",
                          std::to_string(e.start_year) + "-" + std::to_string(e.end_year) + ": " + e.flag});
      }
    }
    Json t{{"cell_id", keys[i].first}, {"duration_days", keys[i].second}, {"n_windows", idx.size()}};
    if (idx.size() >= 3) {
      try {
        const auto tr = ols_trend(idx, level);
        t["ols_slope"] = tr.slope;
        t["ols_p"] = tr.p;
        t["spearman"] = spearman(idx, level);
      } catch (const DomainError&) {
      }
    }
    trends.push_back(t);
  }
  settle(ctx, "window", a.out, errors);
  emit_csv(
      ctx, "window", a.out, a.inputs,
      [&](std::ostream& o) {
        write_row(o, {"cell_id", "duration_days", "start_year", "end_year", "n_maxima", "return_period", "level",
                      "ci_low", "ci_high", "flag"});
        for (std::size_t i = 0; i < pooled.size(); ++i) {
          if (!results[i]) continue;
          for (const auto& w : results[i]->windows) {
            const auto& e = w.estimate;
            write_row(o, {keys[i].first, std::to_string(keys[i].second), std::to_string(w.start_year),
                          std::to_string(w.end_year), std::to_string(w.n_maxima), format_number(a.period),
                          e ? format_number(e->level) : "", e ? format_number(e->ci_low) : "",
                          e ? format_number(e->ci_high) : "", w.flag});
          }
        }
      },
      Json{{"note", "overlapping windows are serially correlated; ols_p assumes independence"}, {"trends", trends}});
}

// ---------------------------------------------------------------------------
// region

struct RegionArgs {
  std::vector<fs::path> fits;
  fs::path mask;
  std::optional<fs::path> out;
  std::vector<std::string> regions;
  int duration = 1;
  double period = 100.0;
};

void cmd_region(Context& ctx, const RegionArgs& a) {
  const RegionMask mask = read_mask_csv(a.mask);
  std::map<std::string, CellResult> per_cell;
  std::vector<ErrorRecord> errors;
  for (const auto& path : a.fits) {
    for (const auto& r : read_fit_artifact(path).fits) {
      if (r.duration_days != a.duration) continue;
      if (r.member_id != kPooledMember)
        throw InputError(path.string() + ": region needs pooled fits (fit --concat); found member " + r.member_id);
      if (per_cell.contains(r.cell_id)) throw MismatchError(path.string() + ": cell " + r.cell_id + " fitted twice");
      if (!r.fit.converged) {
        errors.push_back({r.cell_id, r.member_id, r.duration_days, "region", "fit did not converge"});
        continue;
      }
      CellResult c;
      c.fit = r.fit;
      c.level = return_level(r.fit, a.period, ctx.config.confidence);
      c.ks = r.ks;
      per_cell.emplace(r.cell_id, c);
    }
  }
  if (per_cell.empty()) throw InputError("region: no converged pooled fits for duration " + std::to_string(a.duration));

  std::vector<std::string> regions = a.regions;
  if (regions.empty()) {
    std::set<std::string> labels;
    for (const auto& [cell, region] : mask) labels.insert(region);
    regions.assign(labels.begin(), labels.end());
    regions.emplace_back(kConusRegion);
  }
  std::vector<RegionalSummary> summaries;
  for (const auto& region : regions) {
    try {
      summaries.push_back(regional_aggregate(per_cell, mask, region));
    } catch (const DomainError& e) {
      const std::string msg = e.what();
      if (msg.find("not covered by the region mask") != std::string::npos) throw InputError("region: " + msg);
      errors.push_back({region, "", a.duration, "region", msg});
    }
  }
  settle(ctx, "region", a.out, errors);
  std::vector<fs::path> inputs = a.fits;
  inputs.push_back(a.mask);
  emit_csv(ctx, "region", a.out, inputs, [&](std::ostream& o) {
    write_row(o, {"region", "duration_days", "return_period", "n_used", "n_excluded", "mean", "median", "q25", "q75",
                  "iqr"});
    for (const auto& s : summaries)
      write_row(o, {s.region, std::to_string(a.duration), format_number(a.period), std::to_string(s.n_used),
                    std::to_string(s.n_excluded), format_number(s.mean), format_number(s.median),
                    format_number(s.q25), format_number(s.q75), format_number(s.iqr)});
  });
}

// ---------------------------------------------------------------------------
// stats

struct StatsArgs {
  fs::path input;
  std::optional<fs::path> out;
  std::string value = "value";
  std::optional<std::string> group;
  bool pooled = false;
  int grid = 256;
  std::optional<std::string> ratio_to;
};

// Group name -> values, groups in order of first appearance.
std::vector<std::pair<std::string, std::vector<double>>> grouped_column(const StatsArgs& a) {
  const auto t = read_csv(a.input);
  const std::size_t vc = t.column(a.value);
  const std::optional<std::size_t> gc = a.group ? std::optional(t.column(*a.group)) : std::nullopt;
  std::vector<std::pair<std::string, std::vector<double>>> groups;
  std::map<std::string, std::size_t> index;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string name = gc ? t.rows[r][*gc] : std::string("all");
    auto [it, fresh] = index.emplace(name, groups.size());
    if (fresh) groups.push_back({name, {}});
    groups[it->second].second.push_back(t.number(r, vc));
  }
  return groups;
}

Json group_sizes(const std::vector<std::pair<std::string, std::vector<double>>>& groups) {
  Json g = Json::array();
  for (const auto& [name, v] : groups) g.push_back({{"group", name}, {"n", v.size()}});
  return g;
}

void cmd_stats_kruskal(Context& ctx, const StatsArgs& a) {
  if (!a.group) throw ConfigError("stats kruskal: --group is required");
  const auto groups = grouped_column(a);
  std::vector<std::vector<double>> values;
  for (const auto& g : groups) values.push_back(g.second);
  const auto r = kruskal_wallis(values);
  Json j = provenance_json(provenance(ctx, "stats kruskal", {a.input}));
  j["kind"] = "kruskal_wallis";
  j["groups"] = group_sizes(groups);
  j["h"] = r.h;
  j["p"] = r.p;
  j["df"] = r.df;
  emit_json(ctx, a.out, j);
}

void cmd_stats_ttest(Context& ctx, const StatsArgs& a) {
  if (!a.group) throw ConfigError("stats ttest: --group is required");
  const auto groups = grouped_column(a);
  if (groups.size() != 2)
    throw InputError(a.input.string() + ": t-test needs exactly two groups, found " + std::to_string(groups.size()));
  const auto r = t_test_independent(groups[0].second, groups[1].second,
                                    a.pooled ? VarianceModel::pooled : VarianceModel::welch);
  Json j = provenance_json(provenance(ctx, "stats ttest", {a.input}));
  j["kind"] = "t_test";
  j["variance_model"] = a.pooled ? "pooled" : "welch";
  j["groups"] = group_sizes(groups);
  j["t"] = r.t;
  j["p"] = r.p;
  j["df"] = r.df;
  emit_json(ctx, a.out, j);
}

// With --ratio-to, each group's IQR is also divided by the reference
// group's (e.g. MICE over MME spread of windowed return levels).
void cmd_stats_iqr(Context& ctx, const StatsArgs& a) {
  const auto groups = grouped_column(a);
  std::optional<double> ref;
  if (a.ratio_to) {
    for (const auto& [name, v] : groups)
      if (name == *a.ratio_to) ref = quartiles(v).iqr();
    if (!ref) throw InputError(a.input.string() + ": no group '" + *a.ratio_to + "'");
    if (*ref == 0.0) throw DomainError("reference group '" + *a.ratio_to + "' has zero IQR");
  }
  emit_csv(ctx, "stats iqr", a.out, {a.input}, [&](std::ostream& o) {
    std::vector<std::string> header{"group", "n", "q25", "q50", "q75", "iqr"};
    if (ref) header.emplace_back("iqr_ratio");
    write_row(o, header);
    for (const auto& [name, v] : groups) {
      const auto q = quartiles(v);
      std::vector<std::string> row{name, std::to_string(v.size()), format_number(q.q25), format_number(q.q50),
                                   format_number(q.q75), format_number(q.iqr())};
      if (ref) row.push_back(format_number(q.iqr() / *ref));
      write_row(o, row);
    }
  });
}

void cmd_stats_kde(Context& ctx, const StatsArgs& a) {
  if (a.grid < 2) throw ConfigError("stats kde: --grid must be >= 2");
  const auto groups = grouped_column(a);
  std::vector<std::vector<DensityPoint>> curves;
  for (const auto& g : groups) curves.push_back(kde(g.second, static_cast<std::size_t>(a.grid)));
  Json bw = Json::array();
  for (const auto& g : groups) bw.push_back({{"group", g.first}, {"bandwidth", silverman_bandwidth(g.second)}});
  emit_csv(
      ctx, "stats kde", a.out, {a.input},
      [&](std::ostream& o) {
        write_row(o, {"group", "x", "density"});
        for (std::size_t i = 0; i < groups.size(); ++i)
          for (const auto& p : curves[i]) write_row(o, {groups[i].first, format_number(p.x), format_number(p.density)});
      },
      Json{{"bandwidths", bw}});
}

// ---------------------------------------------------------------------------
// scaling

struct ScalingArgs {
  std::vector<fs::path> inputs;
  fs::path temperature;
  std::optional<fs::path> out;
  std::string ref = "1981-2000";
  std::string future = "2081-2100";
  double period = 100.0;
};

void cmd_scaling(Context& ctx, const ScalingArgs& a) {
  const YearRange ref = parse_year_range(a.ref, "--ref");
  const YearRange fut = parse_year_range(a.future, "--future");
  const auto series = load_daily(a.inputs);
  for (const auto& s : series) s.validate();
  const auto temps = read_temperature_csv(a.temperature);
  std::vector<ErrorRecord> errors;
  std::vector<std::optional<ScalingResult>> results(series.size());
  std::vector<std::string> failures(series.size());
  const auto maxima_opts = ctx.maxima();
  parallel_for(series.size(), ctx.workers(), [&](std::size_t i) {
    const auto& s = series[i];
    auto it = temps.find({s.cell_id, s.member_id});
    if (it == temps.end()) it = temps.find({s.cell_id, kPooledMember});
    if (it == temps.end()) {
      failures[i] = "no temperature series for this member";
      return;
    }
    try {
      results[i] = percentile_scaling({s, it->second}, ref, fut, a.period, maxima_opts);
    } catch (const DomainError& e) {
      failures[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (!results[i]) {
      errors.push_back({series[i].cell_id, series[i].member_id, 0, "scaling", failures[i]});
    } else if (!results[i]->delta_rl_per_K) {
      for (const auto& w : results[i]->warnings) errors.push_back({series[i].cell_id, series[i].member_id, 1, "scaling", w});
    }
  }
  settle(ctx, "scaling", a.out, errors);
  std::vector<fs::path> inputs = a.inputs;
  inputs.push_back(a.temperature);
  emit_csv(ctx, "scaling", a.out, inputs, [&](std::ostream& o) {
    write_row(o, {"cell_id", "member_id", "ref_first", "ref_last", "future_first", "future_last", "delta_T",
                  "p999_ref", "p999_future", "delta_p999_per_K", "return_period", "rl_ref", "rl_future",
                  "delta_rl_per_K"});
    for (std::size_t i = 0; i < series.size(); ++i) {
      if (!results[i]) continue;
      const auto& r = *results[i];
      write_row(o, {series[i].cell_id, series[i].member_id, std::to_string(ref.first), std::to_string(ref.last),
                    std::to_string(fut.first), std::to_string(fut.last), format_number(r.delta_T),
                    format_number(r.p999_ref), format_number(r.p999_future), format_number(r.delta_p999_per_K),
                    format_number(a.period), opt_number(r.rl_ref), opt_number(r.rl_future),
                    opt_number(r.delta_rl_per_K)});
    }
  });
}

// ---------------------------------------------------------------------------
// synth

SynthSpec load_spec(Context& ctx, const fs::path& path) {
  SynthSpec spec = synth_spec_from_json(read_json_file(path), path.string());
  if (ctx.seed_explicit) spec.seed = ctx.config.seed;
  ctx.config.seed = spec.seed;
  return spec;
}

struct SynthArgs {
  fs::path spec;
  fs::path out_dir;
};

void cmd_synth(Context& ctx, const SynthArgs& a) {
  const SynthSpec spec = load_spec(ctx, a.spec);
  std::error_code ec;
  fs::create_directories(a.out_dir, ec);
  if (ec) throw InputError(a.out_dir.string() + ": cannot create directory: " + ec.message());
  const Json extra{{"spec", to_json(spec)}};
  const std::vector<fs::path> inputs{a.spec};

  emit_csv(ctx, "synth", a.out_dir / "grid.csv", inputs, [&](std::ostream& o) { write_grid_csv(o, spec.cells); },
           extra);
  const std::size_t n_cells = spec.cells.size();
  if (spec.truth) {
    std::vector<std::vector<BlockMaximaSeries>> per_cell(n_cells);
    parallel_for(n_cells, ctx.workers(), [&](std::size_t c) { per_cell[c] = generate_maxima_ensemble(spec, c); });
    std::vector<BlockMaximaSeries> all;
    for (auto& v : per_cell)
      for (auto& s : v) all.push_back(std::move(s));
    emit_csv(ctx, "synth", a.out_dir / "maxima.csv", inputs, [&](std::ostream& o) { write_maxima_csv(o, all); },
             extra);
  }
  if (spec.daily) {
    std::vector<DailyEnsemble> per_cell(n_cells);
    parallel_for(n_cells, ctx.workers(), [&](std::size_t c) { per_cell[c] = generate_daily_ensemble(spec, c); });
    std::vector<DailySeries> total;
    std::vector<DailySeries> conv;
    TemperatureTable temps;
    for (std::size_t c = 0; c < n_cells; ++c) {
      auto& e = per_cell[c];
      for (std::size_t m = 0; m < e.total.size(); ++m) {
        if (!e.temperature.empty()) temps[{e.total[m].cell_id, e.total[m].member_id}] = e.temperature[m];
        total.push_back(std::move(e.total[m]));
      }
      for (auto& s : e.convective) conv.push_back(std::move(s));
    }
    emit_csv(ctx, "synth", a.out_dir / "daily.csv", inputs, [&](std::ostream& o) { write_daily_csv(o, total); },
             extra);
    if (!conv.empty())
      emit_csv(ctx, "synth", a.out_dir / "convective.csv", inputs, [&](std::ostream& o) { write_daily_csv(o, conv); },
               extra);
    if (!temps.empty())
      emit_csv(ctx, "synth", a.out_dir / "temperature.csv", inputs,
               [&](std::ostream& o) { write_temperature_csv(o, temps); }, extra);
  }
}

// ---------------------------------------------------------------------------
// experiment-concat

struct ConcatArgs {
  fs::path spec;
  std::optional<fs::path> out;
  std::string sizes = "all";
  int repeats = 20;
  double period = 100.0;
};

void cmd_experiment_concat(Context& ctx, const ConcatArgs& a) {
  const SynthSpec spec = load_spec(ctx, a.spec);
  if (!spec.truth) throw ConfigError(a.spec.string() + ": experiment-concat needs a GEV truth");
  if (a.repeats < 1) throw ConfigError("experiment-concat: --repeats must be >= 1");
  std::vector<int> sizes;
  if (a.sizes == "all") {
    for (int k = 1; k <= spec.n_members; ++k) sizes.push_back(k);
  } else {
    sizes = parse_int_list(a.sizes, "--sizes");
    for (int k : sizes)
      if (k < 1 || k > spec.n_members)
        throw ConfigError("--sizes: " + std::to_string(k) + " outside 1.." + std::to_string(spec.n_members));
  }
  const auto rows = concatenation_curve(spec, a.period, sizes, static_cast<std::size_t>(a.repeats),
                                        hash64(spec.seed, 0x4355), ctx.config.confidence, ctx.workers());
  std::vector<ErrorRecord> errors;
  for (const auto& r : rows)
    if (r.n_failed) errors.push_back({"k=" + std::to_string(r.k), "", 0, "experiment", std::to_string(r.n_failed) + " fits failed"});

  Json summary = Json::object();
  std::vector<double> ks;
  std::vector<double> widths;
  double w1 = std::nan("");
  for (const auto& r : rows) {
    if (r.n_fits == 0) continue;
    ks.push_back(r.k);
    widths.push_back(r.mean_width);
    if (r.k == 1) w1 = r.mean_width;
  }
  if (ks.size() >= 2) summary["spearman_k_width"] = spearman(ks, widths);
  if (std::isfinite(w1)) {
    Json ratios = Json::array();
    for (const auto& r : rows)
      if (r.n_fits)
        ratios.push_back({{"k", r.k}, {"width_ratio", r.mean_width / w1}, {"k_pow_minus_half", 1.0 / std::sqrt(r.k)}});
    summary["ratios"] = ratios;
  }
  settle(ctx, "experiment-concat", a.out, errors);
  emit_csv(
      ctx, "experiment-concat", a.out, {a.spec},
      [&](std::ostream& o) {
        write_row(o, {"k", "n_fits", "n_failed", "mean_width", "sd_width", "min_width", "median_width", "max_width"});
        for (const auto& r : rows)
          write_row(o, {std::to_string(r.k), std::to_string(r.n_fits), std::to_string(r.n_failed),
                        format_number(r.mean_width), format_number(r.sd_width), format_number(r.min_width),
                        format_number(r.median_width), format_number(r.max_width)});
      },
      Json{{"spec", to_json(spec)}, {"return_period", a.period}, {"repeats", a.repeats}, {"summary", summary}});
}

// ---------------------------------------------------------------------------
// bands

struct BandsArgs {
  std::vector<fs::path> total;
  std::vector<fs::path> convective;
  fs::path grid;
  std::optional<fs::path> out;
  std::optional<fs::path> members_out;
  std::optional<double> lower;
  std::optional<double> upper;
  double width = 1.0;
  std::string extreme = "amp";
  std::string test = "permutation";
};

void cmd_bands(Context& ctx, const BandsArgs& a) {
  const auto total = load_daily(a.total);
  const auto conv = load_daily(a.convective);
  const auto grid = read_grid_csv(a.grid);
  std::map<std::string, double> lats;
  for (const auto& c : grid) lats[c.cell_id] = c.lat;
  std::map<std::pair<std::string, std::string>, const DailySeries*> conv_by_key;
  for (const auto& s : conv) conv_by_key[{s.cell_id, s.member_id}] = &s;
  std::vector<ConvectivePair> pairs;
  for (const auto& s : total) {
    s.validate();
    const auto it = conv_by_key.find({s.cell_id, s.member_id});
    if (it == conv_by_key.end()) throw MismatchError("no convective series for " + s.cell_id + "/" + s.member_id);
    it->second->validate();
    if (!lats.contains(s.cell_id)) throw MismatchError(a.grid.string() + ": no grid entry for cell " + s.cell_id);
    pairs.push_back({*it->second, s});
  }
  if (pairs.empty()) throw InputError("bands: no series");
  double lo = 90.0;
  double hi = -90.0;
  for (const auto& [cell, lat] : lats) {
    lo = std::min(lo, lat);
    hi = std::max(hi, lat);
  }
  const double lower = a.lower.value_or(std::floor(lo / a.width) * a.width);
  const double upper = a.upper.value_or((std::floor(hi / a.width) + 1.0) * a.width);
  const auto bands = make_bands(lower, upper, a.width);

  BandOptions opt;
  opt.extreme = parse_extreme_definition(a.extreme);
  opt.test = parse_bound_test(a.test);
  opt.resamples = static_cast<std::size_t>(ctx.config.bootstrap_resamples);
  opt.seed = ctx.config.seed;
  opt.maxima = ctx.maxima();
  const auto r = convective_fraction_bands(pairs, bands, lats, opt);

  std::vector<ErrorRecord> errors;
  for (const auto& w : r.warnings) errors.push_back({"", "", 0, "bands", w});
  // Skipped bands and outlying cells are reported but do not fail the run.
  const bool strict = ctx.config.strict;
  ctx.config.strict = false;
  settle(ctx, "bands", a.out, errors);
  ctx.config.strict = strict;

  std::vector<fs::path> inputs = a.total;
  inputs.insert(inputs.end(), a.convective.begin(), a.convective.end());
  inputs.push_back(a.grid);
  const Json extra{{"bound_test", to_string(opt.test)},
                   {"extreme_definition", a.extreme},
                   {"n_violations", r.n_violations}};
  emit_csv(
      ctx, "bands", a.out, inputs,
      [&](std::ostream& o) {
        write_row(o, {"band_lower", "band_upper", "n_cells", "n_members", "n_events", "q25", "q50", "q75", "iqr",
                      "p_value"});
        for (const auto& b : r.bands)
          write_row(o, {format_number(b.band.lower), format_number(b.band.upper), std::to_string(b.n_cells),
                        std::to_string(b.member_ids.size()), std::to_string(b.n_events),
                        format_number(b.quartiles.q25), format_number(b.quartiles.q50),
                        format_number(b.quartiles.q75), format_number(b.iqr), format_number(b.p_value)});
      },
      extra);
  if (a.members_out) {
    emit_csv(
        ctx, "bands", a.members_out, inputs,
        [&](std::ostream& o) {
          write_row(o, {"band_lower", "band_upper", "member_id", "fraction"});
          for (const auto& b : r.bands)
            for (std::size_t m = 0; m < b.member_ids.size(); ++m)
              write_row(o, {format_number(b.band.lower), format_number(b.band.upper), b.member_ids[m],
                            format_number(b.member_fraction[m])});
        },
        extra);
  }
}

// ---------------------------------------------------------------------------
// Command line

struct GlobalFlags {
  std::optional<fs::path> config;
  std::map<std::string, std::pair<std::string, std::string>> values;  // config key -> (flag, text)
  bool strict = false;
  bool lenient = false;
};

void add_config_flag(CLI::App& app, GlobalFlags& g, const std::string& flag, const std::string& key,
                     const std::string& help) {
  app.add_option_function<std::string>(flag, [&g, key, flag](const std::string& v) { g.values[key] = {flag, v}; }, help);
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"ensx: extreme-value analysis of ensemble precipitation", "ensx"};
  app.set_version_flag("--version", std::string("ensx ") + kToolVersion);
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  app.add_option("--config", g.config, "JSON file of run settings");
  add_config_flag(app, g, "--seed", "seed", "master seed");
  add_config_flag(app, g, "--workers", "workers", "worker threads (0 = all cores)");
  add_config_flag(app, g, "--durations", "durations", "accumulation durations in days, e.g. 1,2,3,5,6,10");
  add_config_flag(app, g, "--periods", "return_periods", "return periods in years, e.g. 30,100");
  add_config_flag(app, g, "--confidence", "confidence", "interval confidence level");
  add_config_flag(app, g, "--ks-alpha", "ks_alpha", "KS significance level");
  add_config_flag(app, g, "--window", "window", "moving-window length in years");
  add_config_flag(app, g, "--stride", "stride", "moving-window stride in years");
  add_config_flag(app, g, "--year-start", "year_start", "first day of the block year, MM-DD");
  add_config_flag(app, g, "--coverage", "coverage", "minimum fraction of days present in a block year");
  add_config_flag(app, g, "--knots", "knots", "quantile-map knot count");
  add_config_flag(app, g, "--bootstrap", "bootstrap_resamples", "bootstrap / permutation resamples");
  auto* strict_flag = app.add_flag("--strict", g.strict, "fail the run on any failed unit (default)");
  app.add_flag("--lenient", g.lenient, "report failed units and continue")->excludes(strict_flag);

  Context ctx{RunConfig{}, false, out, err};
  std::function<void()> action;

  AmaxArgs amax;
  auto* c_amax = app.add_subcommand("amax", "annual maxima of d-day accumulations");
  c_amax->add_option("-i,--input", amax.inputs, "daily CSV")->required()->check(CLI::ExistingFile);
  c_amax->add_option("-o,--out", amax.out, "maxima CSV");
  c_amax->callback([&] { action = [&] { cmd_amax(ctx, amax); }; });

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "GEV maximum-likelihood fits");
  c_fit->add_option("-i,--input", fit.inputs, "maxima CSV")->required()->check(CLI::ExistingFile);
  c_fit->add_option("-o,--out", fit.out, "fit artifact JSON");
  auto* concat_flag = c_fit->add_flag("--concat", "fit the concatenated members (default)");
  c_fit->add_flag("--per-member", fit.per_member, "fit every member separately")->excludes(concat_flag);
  c_fit->add_option("--duration", fit.duration, "only this duration");
  c_fit->callback([&] { action = [&] { cmd_fit(ctx, fit); }; });

  RlArgs rl;
  auto* c_rl = app.add_subcommand("rl", "return levels from a fit artifact");
  c_rl->add_option("-f,--fit", rl.fit, "fit artifact JSON")->required()->check(CLI::ExistingFile);
  c_rl->add_option("-o,--out", rl.out, "return-level CSV");
  c_rl->add_option("--method", rl.method, "delta or bootstrap")->check(CLI::IsMember({"delta", "bootstrap"}));
  c_rl->add_option("--maxima", rl.maxima, "maxima CSV the fits came from (bootstrap)")->check(CLI::ExistingFile);
  c_rl->callback([&] { action = [&] { cmd_rl(ctx, rl); }; });

  DdfArgs dd;
  auto* c_ddf = app.add_subcommand("ddf", "depth-duration-frequency tables");
  c_ddf->add_option("-i,--input", dd.inputs, "maxima CSV (all durations)")->required()->check(CLI::ExistingFile);
  c_ddf->add_option("-o,--out", dd.out, "DDF CSV");
  c_ddf->add_option("--mode", dd.mode, "concatenated or per-member");
  c_ddf->callback([&] { action = [&] { cmd_ddf(ctx, dd); }; });

  auto* c_qmap = app.add_subcommand("qmap", "quantile-mapping bias correction");
  c_qmap->require_subcommand(1);
  QmapBuildArgs qb;
  auto* c_qb = c_qmap->add_subcommand("build", "train quantile maps");
  c_qb->add_option("-m,--model", qb.model, "model historical daily CSV")->required()->check(CLI::ExistingFile);
  c_qb->add_option("--obs", qb.obs, "observed daily CSV")->required()->check(CLI::ExistingFile);
  c_qb->add_option("-o,--out", qb.out, "quantile map JSON");
  c_qb->add_flag("--by-month", qb.by_month, "one map per calendar month");
  c_qb->add_option("--train-start", qb.train_start, "first training day YYYY-MM-DD");
  c_qb->add_option("--train-end", qb.train_end, "last training day YYYY-MM-DD");
  c_qb->callback([&] { action = [&] { cmd_qmap_build(ctx, qb); }; });
  QmapApplyArgs qa;
  auto* c_qa = c_qmap->add_subcommand("apply", "apply quantile maps");
  c_qa->add_option("--map", qa.map, "quantile map JSON")->required()->check(CLI::ExistingFile);
  c_qa->add_option("-i,--input", qa.inputs, "daily CSV to correct")->required()->check(CLI::ExistingFile);
  c_qa->add_option("-o,--out", qa.out, "corrected daily CSV");
  c_qa->callback([&] { action = [&] { cmd_qmap_apply(ctx, qa); }; });

  WindowArgs win;
  auto* c_win = app.add_subcommand("window", "moving-window return levels");
  c_win->add_option("-i,--input", win.inputs, "maxima CSV")->required()->check(CLI::ExistingFile);
  c_win->add_option("-o,--out", win.out, "windowed CSV");
  c_win->add_option("--duration", win.duration, "duration in days");
  c_win->add_option("--period", win.period, "return period in years");
  c_win->callback([&] { action = [&] { cmd_window(ctx, win); }; });

  RegionArgs reg;
  auto* c_reg = app.add_subcommand("region", "regional return-level summaries");
  c_reg->add_option("-f,--fit", reg.fits, "pooled fit artifact JSON")->required()->check(CLI::ExistingFile);
  c_reg->add_option("--mask", reg.mask, "region mask CSV")->required()->check(CLI::ExistingFile);
  c_reg->add_option("-o,--out", reg.out, "summary CSV");
  c_reg->add_option("--region", reg.regions, "region label (default: every label and CONUS)");
  c_reg->add_option("--duration", reg.duration, "duration in days");
  c_reg->add_option("--period", reg.period, "return period in years");
  c_reg->callback([&] { action = [&] { cmd_region(ctx, reg); }; });

  auto* c_stats = app.add_subcommand("stats", "hypothesis tests and summaries over CSV columns");
  c_stats->require_subcommand(1);
  StatsArgs st;
  auto stats_sub = [&](const std::string& name, const std::string& help, void (*fn)(Context&, const StatsArgs&)) {
    auto* c = c_stats->add_subcommand(name, help);
    c->add_option("-i,--input", st.input, "CSV with a header")->required()->check(CLI::ExistingFile);
    c->add_option("-o,--out", st.out, "output file");
    c->add_option("--value", st.value, "value column");
    c->add_option("--group", st.group, "grouping column");
    c->callback([&, fn] { action = [&, fn] { fn(ctx, st); }; });
    return c;
  };
  stats_sub("kruskal", "Kruskal-Wallis H-test across groups", cmd_stats_kruskal);
  stats_sub("ttest", "two-sided independent t-test of two groups", cmd_stats_ttest)
      ->add_flag("--pooled", st.pooled, "pooled-variance t-test instead of Welch");
  stats_sub("iqr", "type-7 quartiles per group", cmd_stats_iqr)
      ->add_option("--ratio-to", st.ratio_to, "also report each IQR over this group's IQR");
  stats_sub("kde", "Gaussian kernel density per group", cmd_stats_kde)->add_option("--grid", st.grid, "grid points");

  ScalingArgs sc;
  auto* c_sc = app.add_subcommand("scaling", "percent change per kelvin of P99.9 and return levels");
  c_sc->add_option("-i,--input", sc.inputs, "daily CSV")->required()->check(CLI::ExistingFile);
  c_sc->add_option("-t,--temperature", sc.temperature, "temperature CSV")->required()->check(CLI::ExistingFile);
  c_sc->add_option("-o,--out", sc.out, "scaling CSV");
  c_sc->add_option("--ref", sc.ref, "reference years FIRST-LAST");
  c_sc->add_option("--future", sc.future, "future years FIRST-LAST");
  c_sc->add_option("--period", sc.period, "return period in years");
  c_sc->callback([&] { action = [&] { cmd_scaling(ctx, sc); }; });

  SynthArgs sy;
  auto* c_sy = app.add_subcommand("synth", "write a synthetic dataset in the ingestion format");
  c_sy->add_option("-s,--spec", sy.spec, "synth spec JSON")->required()->check(CLI::ExistingFile);
  c_sy->add_option("-d,--out-dir", sy.out_dir, "output directory")->required();
  c_sy->callback([&] { action = [&] { cmd_synth(ctx, sy); }; });

  ConcatArgs ce;
  auto* c_ce = app.add_subcommand("experiment-concat", "interval width against members concatenated");
  c_ce->add_option("-s,--spec", ce.spec, "synth spec JSON with a GEV truth")->required()->check(CLI::ExistingFile);
  c_ce->add_option("-o,--out", ce.out, "curve CSV");
  c_ce->add_option("--sizes", ce.sizes, "subset sizes, e.g. 1,4,9 (default all)");
  c_ce->add_option("--repeats", ce.repeats, "random subsets per size");
  c_ce->add_option("--period", ce.period, "return period in years");
  c_ce->callback([&] { action = [&] { cmd_experiment_concat(ctx, ce); }; });

  BandsArgs bd;
  auto* c_bd = app.add_subcommand("bands", "convective fraction of extremes by latitude band");
  c_bd->add_option("--total", bd.total, "total precipitation daily CSV")->required()->check(CLI::ExistingFile);
  c_bd->add_option("--convective", bd.convective, "convective daily CSV")->required()->check(CLI::ExistingFile);
  c_bd->add_option("--grid", bd.grid, "grid CSV")->required()->check(CLI::ExistingFile);
  c_bd->add_option("-o,--out", bd.out, "band CSV");
  c_bd->add_option("--members-out", bd.members_out, "per-member fraction CSV");
  c_bd->add_option("--lower", bd.lower, "lowest band edge (degrees)");
  c_bd->add_option("--upper", bd.upper, "highest band edge (degrees)");
  c_bd->add_option("--width", bd.width, "band width (degrees)");
  c_bd->add_option("--extreme-def", bd.extreme, "amp or p99")->check(CLI::IsMember({"amp", "p99"}));
  c_bd->add_option("--test", bd.test, "permutation or bootstrap-welch")
      ->check(CLI::IsMember({"permutation", "bootstrap-welch"}));
  c_bd->callback([&] { action = [&] { cmd_bands(ctx, bd); }; });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << app.version() << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  if (g.config) apply_config_file(ctx.config, *g.config);
  apply_environment(ctx.config);
  for (const auto& [key, given] : g.values) set_config_value(ctx.config, key, given.second, given.first);
  if (g.strict) ctx.config.strict = true;
  if (g.lenient) ctx.config.strict = false;
  ctx.config.validate();
  ctx.seed_explicit = g.values.contains("seed") || std::getenv(env_name("seed").c_str()) != nullptr;
  if (!ctx.seed_explicit && g.config) {
    const Json j = read_json_file(*g.config);
    ctx.seed_explicit = j.is_object() && j.contains("seed");
  }
  if (!action) throw ConfigError("no command given");
  action();
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const EstimationFailure& e) {
    err << "estimation failure: " << e.what() << "\n";
    return kExitEstimation;
  } catch (const FitError& e) {
    err << "estimation failure: " << e.what() << "\n";
    return kExitEstimation;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const MismatchError& e) {
    err << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const DomainError& e) {
    err << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace ensx::cli
