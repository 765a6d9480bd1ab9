#include "ensx/cli/artifact.hpp"

#include <openssl/evp.h>

#include <array>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <memory>
#include <sstream>

#include "ensx/daily_series.hpp"
#include "ensx/error.hpp"

namespace ensx::cli {

const char* const kToolVersion = ENSX_VERSION;

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path.string() + ": cannot open file");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw InputError("SHA-256 unavailable");
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xf];
  }
  return out;
}

InputDigest digest(const std::filesystem::path& path) { return {path.filename().string(), sha256_file(path)}; }

Json provenance_json(const Provenance& p) {
  Json j;
  j["tool"] = {{"name", "ensx"}, {"version", kToolVersion}};
  j["command"] = p.command;
  j["config"] = p.config;
  Json inputs = Json::array();
  for (const auto& d : p.inputs) inputs.push_back({{"file", d.file}, {"sha256", d.sha256}});
  j["inputs"] = inputs;
  return j;
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError(path.string() + ": cannot open for writing");
  out << text;
  if (!out) throw InputError(path.string() + ": write failed");
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path.string() + ": cannot open file");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw InputError(path.string() + ": malformed JSON: " + e.what());
  }
}

namespace {

// JSON has no NaN; non-finite numbers are written as null.
Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double get_number(const Json& j, const char* key, const std::string& source) {
  if (!j.contains(key)) throw InputError(source + ": missing '" + key + "'");
  const auto& v = j.at(key);
  if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!v.is_number()) throw InputError(source + ": '" + key + "' is not a number");
  return v.get<double>();
}

template <typename T>
T get(const Json& j, const char* key, const std::string& source) {
  if (!j.contains(key)) throw InputError(source + ": missing '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw InputError(source + ": '" + key + "' has the wrong type");
  }
}

Provenance provenance_from_json(const Json& j, const std::string& source) {
  Provenance p;
  p.command = get<std::string>(j, "command", source);
  p.config = j.value("config", Json::object());
  for (const auto& d : j.value("inputs", Json::array()))
    p.inputs.push_back({get<std::string>(d, "file", source), get<std::string>(d, "sha256", source)});
  return p;
}

}  // namespace

Json to_json(const ReturnLevelEstimate& e) {
  Json j;
  j["return_period"] = e.return_period;
  j["level"] = number(e.level);
  j["ci_low"] = number(e.ci_low);
  j["ci_high"] = number(e.ci_high);
  j["confidence"] = e.confidence;
  j["method"] = to_string(e.method);
  return j;
}

Json to_json(const FitRecord& r) {
  Json j;
  j["cell_id"] = r.cell_id;
  j["duration_days"] = r.duration_days;
  j["member_id"] = r.member_id;
  j["n_members"] = r.n_members;
  j["params"] = {{"location", number(r.fit.params.location)},
                 {"scale", number(r.fit.params.scale)},
                 {"shape", number(r.fit.params.shape)}};
  Json cov = Json::array();
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) cov.push_back(number(r.fit.covariance(i, k)));
  j["covariance"] = cov;
  j["log_likelihood"] = number(r.fit.log_likelihood);
  j["n_samples"] = r.fit.n_samples;
  j["converged"] = r.fit.converged;
  j["iterations"] = r.fit.n_iterations;
  j["ks"] = {{"statistic", number(r.ks.statistic)},
             {"p_value", number(r.ks.p_value)},
             {"alpha", r.ks.alpha},
             {"pass", r.ks.pass}};
  Json levels = Json::array();
  for (const auto& e : r.levels) levels.push_back(to_json(e));
  j["return_levels"] = levels;
  j["heterogeneous"] = r.heterogeneous;
  Json warnings = Json::array();
  for (const auto& w : r.fit.warnings) warnings.push_back(w);
  for (const auto& w : r.warnings) warnings.push_back(w);
  j["warnings"] = warnings;
  return j;
}

Json to_json(const FitArtifact& a) {
  Json j = provenance_json(a.provenance);
  j["kind"] = "gev_fit";
  j["mode"] = a.mode;
  Json fits = Json::array();
  for (const auto& r : a.fits) fits.push_back(to_json(r));
  j["fits"] = fits;
  return j;
}

FitRecord fit_record_from_json(const Json& j, const std::string& source) {
  FitRecord r;
  r.cell_id = get<std::string>(j, "cell_id", source);
  r.duration_days = get<int>(j, "duration_days", source);
  r.member_id = get<std::string>(j, "member_id", source);
  r.n_members = get<std::size_t>(j, "n_members", source);
  const auto& p = j.at("params");
  r.fit.params = {get_number(p, "location", source), get_number(p, "scale", source), get_number(p, "shape", source)};
  const auto& cov = j.at("covariance");
  if (!cov.is_array() || cov.size() != 9) throw InputError(source + ": covariance must hold 9 numbers");
  for (int i = 0; i < 9; ++i) {
    const auto& v = cov[static_cast<std::size_t>(i)];
    r.fit.covariance(i / 3, i % 3) = v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
  }
  r.fit.log_likelihood = get_number(j, "log_likelihood", source);
  r.fit.n_samples = get<std::size_t>(j, "n_samples", source);
  r.fit.converged = get<bool>(j, "converged", source);
  r.fit.n_iterations = j.value("iterations", 0);
  if (j.contains("ks")) {
    const auto& k = j.at("ks");
    r.ks.statistic = get_number(k, "statistic", source);
    r.ks.p_value = get_number(k, "p_value", source);
    r.ks.alpha = get_number(k, "alpha", source);
    r.ks.pass = get<bool>(k, "pass", source);
  }
  for (const auto& e : j.value("return_levels", Json::array())) {
    ReturnLevelEstimate x;
    x.return_period = get_number(e, "return_period", source);
    x.level = get_number(e, "level", source);
    x.ci_low = get_number(e, "ci_low", source);
    x.ci_high = get_number(e, "ci_high", source);
    x.confidence = get_number(e, "confidence", source);
    x.method = get<std::string>(e, "method", source) == "bootstrap" ? CiMethod::bootstrap : CiMethod::delta;
    r.levels.push_back(x);
  }
  r.heterogeneous = j.value("heterogeneous", false);
  for (const auto& w : j.value("warnings", Json::array())) r.warnings.push_back(w.get<std::string>());
  return r;
}

FitArtifact read_fit_artifact(const std::filesystem::path& path) {
  const std::string source = path.string();
  const Json j = read_json_file(path);
  try {
    if (j.value("kind", "") != "gev_fit") throw InputError(source + ": not a GEV fit artifact");
    FitArtifact a;
    a.provenance = provenance_from_json(j, source);
    a.mode = get<std::string>(j, "mode", source);
    for (const auto& f : j.at("fits")) a.fits.push_back(fit_record_from_json(f, source));
    return a;
  } catch (const Json::exception& e) {
    throw InputError(source + ": malformed fit artifact: " + e.what());
  }
}

Json to_json(const QuantileMap& m) {
  Json j;
  j["cell_id"] = m.cell_id;
  j["month"] = m.month ? Json(*m.month) : Json(nullptr);
  j["train_start"] = format_date(m.train_start);
  j["train_end"] = format_date(m.train_end);
  j["probs"] = m.probs;
  j["model_quantiles"] = m.model_quantiles;
  j["obs_quantiles"] = m.obs_quantiles;
  return j;
}

Json to_json(const QuantileMapArtifact& a) {
  Json j = provenance_json(a.provenance);
  j["kind"] = "quantile_map";
  Json maps = Json::array();
  for (const auto& m : a.maps) maps.push_back(to_json(m));
  j["maps"] = maps;
  return j;
}

QuantileMap quantile_map_from_json(const Json& j, const std::string& source) {
  QuantileMap m;
  m.cell_id = get<std::string>(j, "cell_id", source);
  if (j.contains("month") && !j.at("month").is_null()) m.month = get<unsigned>(j, "month", source);
  m.train_start = parse_date(get<std::string>(j, "train_start", source));
  m.train_end = parse_date(get<std::string>(j, "train_end", source));
  m.probs = get<std::vector<double>>(j, "probs", source);
  m.model_quantiles = get<std::vector<double>>(j, "model_quantiles", source);
  m.obs_quantiles = get<std::vector<double>>(j, "obs_quantiles", source);
  m.validate();
  return m;
}

QuantileMapArtifact read_quantile_map_artifact(const std::filesystem::path& path) {
  const std::string source = path.string();
  const Json j = read_json_file(path);
  try {
    if (j.value("kind", "") != "quantile_map") throw InputError(source + ": not a quantile map artifact");
    QuantileMapArtifact a;
    a.provenance = provenance_from_json(j, source);
    for (const auto& m : j.at("maps")) a.maps.push_back(quantile_map_from_json(m, source));
    return a;
  } catch (const Json::exception& e) {
    throw InputError(source + ": malformed quantile map artifact: " + e.what());
  }
}

namespace {

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read_opt(const Json& j, const char* key, T& field, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    field = j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ConfigError(where + ": '" + key + "' has the wrong type");
  }
}

}  // namespace

SynthSpec synth_spec_from_json(const Json& j, const std::string& source) {
  check_keys(j, {"truth", "daily", "convective", "temperature", "n_members", "n_years", "start_year", "seed",
                 "location_drift_per_year", "heterogeneity", "cells"},
             source);
  SynthSpec s;
  if (j.contains("truth")) {
    const auto& t = j.at("truth");
    const std::string w = source + ": truth";
    check_keys(t, {"location", "scale", "shape"}, w);
    GevParams p{0.0, 1.0, 0.0};
    read_opt(t, "location", p.location, w);
    read_opt(t, "scale", p.scale, w);
    read_opt(t, "shape", p.shape, w);
    s.truth = p;
  }
  if (j.contains("daily")) {
    const auto& d = j.at("daily");
    const std::string w = source + ": daily";
    check_keys(d, {"wet_probability", "gamma_shape", "gamma_scale", "seasonal_amplitude"}, w);
    DailyGenerator g;
    read_opt(d, "wet_probability", g.wet_probability, w);
    read_opt(d, "gamma_shape", g.gamma_shape, w);
    read_opt(d, "gamma_scale", g.gamma_scale, w);
    read_opt(d, "seasonal_amplitude", g.seasonal_amplitude, w);
    s.daily = g;
  }
  if (j.contains("convective")) {
    const auto& c = j.at("convective");
    const std::string w = source + ": convective";
    check_keys(c, {"base_fraction", "lat_slope", "reference_lat", "noise_sd"}, w);
    ConvectiveGenerator g;
    read_opt(c, "base_fraction", g.base_fraction, w);
    read_opt(c, "lat_slope", g.lat_slope, w);
    read_opt(c, "reference_lat", g.reference_lat, w);
    read_opt(c, "noise_sd", g.noise_sd, w);
    s.convective = g;
  }
  if (j.contains("temperature")) {
    const auto& t = j.at("temperature");
    const std::string w = source + ": temperature";
    check_keys(t, {"base_K", "trend_K_per_year", "noise_sd"}, w);
    TemperatureGenerator g;
    read_opt(t, "base_K", g.base_K, w);
    read_opt(t, "trend_K_per_year", g.trend_K_per_year, w);
    read_opt(t, "noise_sd", g.noise_sd, w);
    s.temperature = g;
  }
  if (j.contains("heterogeneity")) {
    const auto& h = j.at("heterogeneity");
    const std::string w = source + ": heterogeneity";
    check_keys(h, {"location_spread", "scale_spread", "shape_spread", "fraction_spread"}, w);
    read_opt(h, "location_spread", s.heterogeneity.location_spread, w);
    read_opt(h, "scale_spread", s.heterogeneity.scale_spread, w);
    read_opt(h, "shape_spread", s.heterogeneity.shape_spread, w);
    read_opt(h, "fraction_spread", s.heterogeneity.fraction_spread, w);
  }
  read_opt(j, "n_members", s.n_members, source);
  read_opt(j, "n_years", s.n_years, source);
  read_opt(j, "start_year", s.start_year, source);
  read_opt(j, "seed", s.seed, source);
  read_opt(j, "location_drift_per_year", s.location_drift_per_year, source);
  if (j.contains("cells")) {
    if (!j.at("cells").is_array()) throw ConfigError(source + ": cells must be an array");
    s.cells.clear();
    for (const auto& c : j.at("cells")) {
      const std::string w = source + ": cells";
      check_keys(c, {"cell_id", "lat", "lon"}, w);
      GridCell g;
      read_opt(c, "cell_id", g.cell_id, w);
      read_opt(c, "lat", g.lat, w);
      read_opt(c, "lon", g.lon, w);
      if (g.cell_id.empty()) throw ConfigError(w + ": empty cell_id");
      s.cells.push_back(g);
    }
  }
  s.validate();
  return s;
}

Json to_json(const SynthSpec& s) {
  Json j;
  if (s.truth) j["truth"] = {{"location", s.truth->location}, {"scale", s.truth->scale}, {"shape", s.truth->shape}};
  if (s.daily)
    j["daily"] = {{"wet_probability", s.daily->wet_probability},
                  {"gamma_shape", s.daily->gamma_shape},
                  {"gamma_scale", s.daily->gamma_scale},
                  {"seasonal_amplitude", s.daily->seasonal_amplitude}};
  if (s.convective)
    j["convective"] = {{"base_fraction", s.convective->base_fraction},
                       {"lat_slope", s.convective->lat_slope},
                       {"reference_lat", s.convective->reference_lat},
                       {"noise_sd", s.convective->noise_sd}};
  if (s.temperature)
    j["temperature"] = {{"base_K", s.temperature->base_K},
                        {"trend_K_per_year", s.temperature->trend_K_per_year},
                        {"noise_sd", s.temperature->noise_sd}};
  j["n_members"] = s.n_members;
  j["n_years"] = s.n_years;
  j["start_year"] = s.start_year;
  j["seed"] = s.seed;
  j["location_drift_per_year"] = s.location_drift_per_year;
  j["heterogeneity"] = {{"location_spread", s.heterogeneity.location_spread},
                        {"scale_spread", s.heterogeneity.scale_spread},
                        {"shape_spread", s.heterogeneity.shape_spread},
                        {"fraction_spread", s.heterogeneity.fraction_spread}};
  Json cells = Json::array();
  for (const auto& c : s.cells) cells.push_back({{"cell_id", c.cell_id}, {"lat", c.lat}, {"lon", c.lon}});
  j["cells"] = cells;
  return j;
}

std::filesystem::path errors_sidecar_path(const std::filesystem::path& output) {
  return output.string() + ".errors.json";
}

std::filesystem::path meta_sidecar_path(const std::filesystem::path& output) { return output.string() + ".meta.json"; }

void write_errors_sidecar(const std::filesystem::path& output, const std::string& command,
                          const std::vector<ErrorRecord>& errors) {
  const auto path = errors_sidecar_path(output);
  if (errors.empty()) {
    std::error_code ec;
    std::filesystem::remove(path, ec);
    return;
  }
  Json list = Json::array();
  for (const auto& e : errors) {
    Json r;
    r["cell_id"] = e.cell_id;
    r["member_id"] = e.member_id;
    r["duration_days"] = e.duration_days == 0 ? Json(nullptr) : Json(e.duration_days);
    r["stage"] = e.stage;
    r["message"] = e.message;
    list.push_back(r);
  }
  Json j;
  j["command"] = command;
  j["n_errors"] = errors.size();
  j["errors"] = list;
  write_text_file(path, dump_json(j));
}

}  // namespace ensx::cli
