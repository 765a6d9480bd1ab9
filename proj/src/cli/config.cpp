#include "ensx/cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <limits>

#include "ensx/cli/number_format.hpp"
#include "ensx/daily_series.hpp"
#include "ensx/error.hpp"

namespace ensx::cli {

namespace {

[[noreturn]] void bad(const std::string& origin, const std::string& key, const std::string& what) {
  throw ConfigError(origin + ": " + key + ": " + what);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    out.push_back(text.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

long long to_integer(const std::string& origin, const std::string& key, const std::string& text) {
  long long v = 0;
  if (!parse_integer(text, v)) bad(origin, key, "expected an integer, got '" + text + "'");
  return v;
}

double to_number(const std::string& origin, const std::string& key, const std::string& text) {
  double v = 0.0;
  if (!parse_number(text, v)) bad(origin, key, "expected a number, got '" + text + "'");
  return v;
}

int to_int(const std::string& origin, const std::string& key, const std::string& text) {
  const long long v = to_integer(origin, key, text);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) bad(origin, key, "out of range");
  return static_cast<int>(v);
}

std::string json_text(const Json& v, const std::string& origin, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number_float()) return format_number(v.get<double>());
  if (v.is_array()) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i].is_array() || v[i].is_object()) bad(origin, key, "nested value");
      if (i) s += ',';
      s += json_text(v[i], origin, key);
    }
    return s;
  }
  bad(origin, key, "unsupported JSON value");
}

}  // namespace

std::string env_name(const std::string& key) {
  std::string s = "ENSX_" + key;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return s;
}

void set_config_value(RunConfig& c, const std::string& key, const std::string& text, const std::string& origin) {
  if (key == "durations") {
    c.durations.clear();
    for (const auto& f : split_list(text)) c.durations.push_back(to_int(origin, key, f));
  } else if (key == "return_periods") {
    c.return_periods.clear();
    for (const auto& f : split_list(text)) c.return_periods.push_back(to_number(origin, key, f));
  } else if (key == "confidence") {
    c.confidence = to_number(origin, key, text);
  } else if (key == "ks_alpha") {
    c.ks_alpha = to_number(origin, key, text);
  } else if (key == "window") {
    c.window = to_int(origin, key, text);
  } else if (key == "stride") {
    c.stride = to_int(origin, key, text);
  } else if (key == "year_start") {
    c.year_start = text;
  } else if (key == "coverage") {
    c.coverage = to_number(origin, key, text);
  } else if (key == "knots") {
    c.knots = to_int(origin, key, text);
  } else if (key == "seed") {
    std::uint64_t v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size())
      bad(origin, key, "expected a nonnegative 64-bit integer, got '" + text + "'");
    c.seed = v;
  } else if (key == "bootstrap_resamples") {
    c.bootstrap_resamples = to_int(origin, key, text);
  } else if (key == "strict") {
    if (text == "true" || text == "1") {
      c.strict = true;
    } else if (text == "false" || text == "0") {
      c.strict = false;
    } else {
      bad(origin, key, "expected true/false, got '" + text + "'");
    }
  } else if (key == "workers") {
    const int w = to_int(origin, key, text);
    if (w < 0) bad(origin, key, "must be >= 0 (0 = all cores)");
    c.workers = static_cast<unsigned>(w);
  } else {
    throw ConfigError(origin + ": unknown setting '" + key + "'");
  }
}

void apply_config_json(RunConfig& config, const Json& json, const std::string& origin) {
  if (!json.is_object()) throw ConfigError(origin + ": expected a JSON object");
  for (const auto& [key, value] : json.items()) set_config_value(config, key, json_text(value, origin, key), origin);
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  apply_config_json(config, j, path.string());
}

void apply_environment(RunConfig& config) {
  for (const auto& key : kConfigKeys) {
    const std::string name = env_name(key);
    if (const char* v = std::getenv(name.c_str())) set_config_value(config, key, v, name);
  }
}

void RunConfig::validate() const {
  if (durations.empty()) throw ConfigError("durations: empty list");
  for (int d : durations)
    if (d < 1) throw ConfigError("durations: " + std::to_string(d) + " is not a positive day count");
  if (return_periods.empty()) throw ConfigError("return_periods: empty list");
  for (double t : return_periods)
    if (!(t > 1.0)) throw ConfigError("return_periods: " + format_number(t) + " must exceed 1 year");
  if (!(confidence > 0.0 && confidence < 1.0)) throw ConfigError("confidence must lie in (0, 1)");
  if (!(ks_alpha > 0.0 && ks_alpha < 1.0)) throw ConfigError("ks_alpha must lie in (0, 1)");
  if (window < 1) throw ConfigError("window must be >= 1");
  if (stride < 1) throw ConfigError("stride must be >= 1");
  parse_year_start(year_start);
  if (!(coverage >= 0.0 && coverage <= 1.0)) throw ConfigError("coverage must lie in [0, 1]");
  if (knots < 1) throw ConfigError("knots must be >= 1");
  if (bootstrap_resamples < 2) throw ConfigError("bootstrap_resamples must be >= 2");
}

Json RunConfig::echo() const {
  Json j;
  j["durations"] = durations;
  j["return_periods"] = return_periods;
  j["confidence"] = confidence;
  j["ks_alpha"] = ks_alpha;
  j["window"] = window;
  j["stride"] = stride;
  j["year_start"] = year_start;
  j["coverage"] = coverage;
  j["knots"] = knots;
  j["seed"] = seed;
  j["bootstrap_resamples"] = bootstrap_resamples;
  j["strict"] = strict;
  return j;
}

}  // namespace ensx::cli
