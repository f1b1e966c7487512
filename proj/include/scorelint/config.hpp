#pragma once

// Evaluation configuration: built-in defaults, overlaid by a JSON config file, then CLI flags.

#include "scorelint/adherence.hpp"
#include "scorelint/cosiatec.hpp"
#include "scorelint/instruments.hpp"
#include "scorelint/plan.hpp"

#include "json.hpp"

#include <cstdint>
#include <cstdio>
#include <string>

namespace scorelint {

inline constexpr int kConfigSchemaVersion = 1;

struct EvaluationConfig {
  ConstraintTable instruments = default_constraint_table();
  DensityThresholds density;
  Rational tempo_tolerance = kDefaultTempoTolerance;
  std::vector<WeightProfile> weight_profiles = scorelint::weight_profiles();
  bool jitter_strict = false;
  bool per_part_structure = false;
  std::size_t max_structure_points = kDefaultMaxStructurePoints;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline nlohmann::json rational_to_json(const Rational& r) { return scorelint::to_string(r); }

inline Rational rational_from_json(const nlohmann::json& j, const std::string& key) {
  try {
    if (j.is_string()) return parse_rational(j.get<std::string>());
    if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
    if (j.is_number_float()) return rational_from_double(j.get<double>());
  } catch (const std::exception& e) {
    throw ConfigError(key + ": " + e.what());
  }
  throw ConfigError(key + ": expected a number or \"p/q\" string");
}

}  // namespace detail

inline nlohmann::json to_json(const WeightProfile& p) {
  nlohmann::json w;
  for (std::size_t c = 0; c < kChannelCount; ++c) w[kChannelNames[c]] = detail::rational_to_json(p.weights[c]);
  return {{"id", p.id}, {"weights", w}};
}

inline WeightProfile weight_profile_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("id") || !j.contains("weights") || !j["weights"].is_object())
    throw ConfigError("weight profile needs \"id\" and \"weights\"");
  WeightProfile p;
  p.id = j["id"].get<std::string>();
  Rational sum{0};
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    const char* name = kChannelNames[c];
    if (!j["weights"].contains(name)) throw ConfigError("weight profile '" + p.id + "' lacks channel " + name);
    p.weights[c] = detail::rational_from_json(j["weights"][name], name);
    if (p.weights[c] < 0) throw ConfigError("negative weight in profile '" + p.id + "'");
    sum += p.weights[c];
  }
  if (sum != 1) throw ConfigError("weights of profile '" + p.id + "' sum to " + scorelint::to_string(sum));
  return p;
}

/// Canonical form of the merged configuration; the fingerprint hashes this text.
inline nlohmann::json to_json(const EvaluationConfig& c) {
  nlohmann::json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["instruments"] = to_json(c.instruments);
  j["density_thresholds"] = {{"low_below", detail::rational_to_json(c.density.low_below)},
                             {"high_above", detail::rational_to_json(c.density.high_above)}};
  j["tempo_tolerance"] = detail::rational_to_json(c.tempo_tolerance);
  j["weight_profiles"] = nlohmann::json::array();
  for (const auto& p : c.weight_profiles) j["weight_profiles"].push_back(to_json(p));
  j["jitter_strict"] = c.jitter_strict;
  j["per_part_structure"] = c.per_part_structure;
  j["max_structure_points"] = c.max_structure_points;
  return j;
}

/// Overlays a config document on `base`. Instrument entries replace same-named entries or are added.
inline void apply_config(EvaluationConfig& base, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "schema_version") {
      if (value != kConfigSchemaVersion) throw ConfigError("unsupported config schema_version");
    } else if (key == "instruments") {
      if (!value.is_array()) throw ConfigError("instruments must be an array");
      for (const auto& entry : value) {
        try {
          base.instruments.upsert(constraints_from_json(entry));
        } catch (const nlohmann::json::exception& e) {
          throw ConfigError(std::string("bad instrument entry: ") + e.what());
        } catch (const ConfigError&) {
          throw;
        } catch (const Error& e) {
          throw ConfigError(std::string("bad instrument entry: ") + e.what());
        }
      }
    } else if (key == "density_thresholds") {
      if (!value.is_object()) throw ConfigError("density_thresholds must be an object");
      for (const auto& [k, v] : value.items()) {
        if (k == "low_below")
          base.density.low_below = detail::rational_from_json(v, k);
        else if (k == "high_above")
          base.density.high_above = detail::rational_from_json(v, k);
        else
          throw ConfigError("unknown density threshold '" + k + "'");
      }
      if (base.density.high_above < base.density.low_below) throw ConfigError("density thresholds out of order");
    } else if (key == "tempo_tolerance") {
      base.tempo_tolerance = detail::rational_from_json(value, key);
      if (base.tempo_tolerance < 0) throw ConfigError("tempo_tolerance must be non-negative");
    } else if (key == "weight_profiles") {
      if (!value.is_array() || value.empty()) throw ConfigError("weight_profiles must be a non-empty array");
      base.weight_profiles.clear();
      for (const auto& p : value) base.weight_profiles.push_back(weight_profile_from_json(p));
    } else if (key == "jitter_strict" || key == "per_part_structure") {
      if (!value.is_boolean()) throw ConfigError(key + " must be a boolean");
      (key == "jitter_strict" ? base.jitter_strict : base.per_part_structure) = value.get<bool>();
    } else if (key == "max_structure_points") {
      if (!value.is_number_unsigned() || value.get<std::size_t>() == 0)
        throw ConfigError("max_structure_points must be a positive integer");
      base.max_structure_points = value.get<std::size_t>();
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
}

inline EvaluationConfig config_from_text(std::string_view text, EvaluationConfig base = {}) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("malformed config JSON: ") + e.what());
  }
  apply_config(base, j);
  return base;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string config_fingerprint(const EvaluationConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_json(c).dump())));
  return buf;
}

}  // namespace scorelint
