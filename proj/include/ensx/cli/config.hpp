#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace ensx::cli {

using Json = nlohmann::ordered_json;

// Resolved run settings. Sources, lowest precedence first: built-in
// defaults, the --config JSON file, ENSX_<KEY> environment variables, then
// command line flags. Keys are the JSON member names below.
struct RunConfig {
  std::vector<int> durations{1, 2, 3, 5, 6, 10};
  std::vector<double> return_periods{30.0, 100.0};
  double confidence = 0.95;
  double ks_alpha = 0.05;
  int window = 30;
  int stride = 1;
  std::string year_start = "01-01";
  double coverage = 0.90;
  int knots = 99;
  std::uint64_t seed = 0;
  int bootstrap_resamples = 1000;
  bool strict = true;
  // 0 selects every hardware thread. Not part of the echo: the worker count
  // never changes results.
  unsigned workers = 0;

  // Throws ConfigError.
  void validate() const;
  // Every result-affecting key, in a fixed order.
  Json echo() const;
};

inline const std::vector<std::string> kConfigKeys{
    "durations", "return_periods", "confidence", "ks_alpha", "window",   "stride", "year_start",
    "coverage",  "knots",          "seed",       "bootstrap_resamples", "strict", "workers"};

// Sets one key from its text form ("1,2,3" for lists, "true"/"false"/"1"/"0"
// for booleans). Throws ConfigError naming `origin` on bad input.
void set_config_value(RunConfig& config, const std::string& key, const std::string& text, const std::string& origin);
// Throws ConfigError for unknown keys or mistyped values.
void apply_config_json(RunConfig& config, const Json& json, const std::string& origin);
void apply_config_file(RunConfig& config, const std::filesystem::path& path);
// ENSX_DURATIONS, ENSX_RETURN_PERIODS, ... (upper-cased keys).
void apply_environment(RunConfig& config);

std::string env_name(const std::string& key);

}  // namespace ensx::cli
