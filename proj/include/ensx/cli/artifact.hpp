#pragma once

// JSON artifacts and provenance. Every artifact carries
//   "tool":   {"name": "ensx", "version": ...}
//   "command": subcommand name
//   "config": RunConfig::echo()
//   "inputs": [{"file": base name, "sha256": hex digest}, ...]
// CSV outputs carry the same block in a "<output>.meta.json" sidecar.

#include <filesystem>
#include <string>
#include <vector>

#include "ensx/bias_correction.hpp"
#include "ensx/cli/config.hpp"
#include "ensx/gev_fit.hpp"
#include "ensx/ks.hpp"
#include "ensx/synth.hpp"

namespace ensx::cli {

extern const char* const kToolVersion;

// Lower-case hex SHA-256 of the file's bytes. Throws InputError.
std::string sha256_file(const std::filesystem::path& path);

struct InputDigest {
  std::string file;
  std::string sha256;
};

InputDigest digest(const std::filesystem::path& path);

struct Provenance {
  std::string command;
  Json config;
  std::vector<InputDigest> inputs;
};

Json provenance_json(const Provenance& p);

// Pretty-printed JSON with a trailing LF.
std::string dump_json(const Json& j);
void write_text_file(const std::filesystem::path& path, const std::string& text);
// Throws InputError naming the file on unreadable or malformed JSON.
Json read_json_file(const std::filesystem::path& path);

// Member id of a fit to the concatenated sample.
inline constexpr const char* kPooledMember = "*";

struct FitRecord {
  std::string cell_id;
  int duration_days = 1;
  std::string member_id = kPooledMember;
  std::size_t n_members = 1;  // members in the fitted sample
  GevFit fit;
  KsResult ks;
  std::vector<ReturnLevelEstimate> levels;
  bool heterogeneous = false;
  std::vector<std::string> warnings;
};

struct FitArtifact {
  Provenance provenance;
  std::string mode;  // "concatenated" or "per_member"
  std::vector<FitRecord> fits;
};

Json to_json(const ReturnLevelEstimate& e);
Json to_json(const FitRecord& r);
Json to_json(const FitArtifact& a);
// Throws InputError on a malformed record.
FitRecord fit_record_from_json(const Json& j, const std::string& source);
FitArtifact read_fit_artifact(const std::filesystem::path& path);

struct QuantileMapArtifact {
  Provenance provenance;
  std::vector<QuantileMap> maps;
};

Json to_json(const QuantileMap& m);
Json to_json(const QuantileMapArtifact& a);
QuantileMap quantile_map_from_json(const Json& j, const std::string& source);
QuantileMapArtifact read_quantile_map_artifact(const std::filesystem::path& path);

// Synthetic dataset spec, e.g.
//   {"truth": {"location": 20, "scale": 5, "shape": 0.1},
//    "n_members": 27, "n_years": 96, "seed": 7,
//    "daily": {"wet_probability": 0.4, "gamma_shape": 0.8, "gamma_scale": 10},
//    "convective": {...}, "temperature": {...}, "heterogeneity": {...},
//    "cells": [{"cell_id": "c0", "lat": 40, "lon": -100}]}
// Unknown keys are rejected. Throws ConfigError.
SynthSpec synth_spec_from_json(const Json& j, const std::string& source);
Json to_json(const SynthSpec& spec);

// Machine-readable record of a per-unit failure.
struct ErrorRecord {
  std::string cell_id;
  std::string member_id;
  int duration_days = 0;  // 0 when not applicable
  std::string stage;
  std::string message;
};

// Writes "<output>.errors.json" when `errors` is nonempty and removes a stale
// one otherwise.
void write_errors_sidecar(const std::filesystem::path& output, const std::string& command,
                          const std::vector<ErrorRecord>& errors);
std::filesystem::path errors_sidecar_path(const std::filesystem::path& output);
std::filesystem::path meta_sidecar_path(const std::filesystem::path& output);

}  // namespace ensx::cli
