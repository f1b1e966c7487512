#pragma once

// Measure-wise structural plan: extraction from a score, pivot-measure selection for
// sparse plans, and the JSON interchange format.

#include "scorelint/instruments.hpp"
#include "scorelint/score.hpp"

#include "json.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace scorelint {

enum class Density { low, medium, high };

inline const char* to_string(Density d) {
  switch (d) {
    case Density::low: return "low";
    case Density::medium: return "medium";
    case Density::high: return "high";
  }
  return "low";
}

struct PitchRange {
  int min_midi = 0;
  int max_midi = 0;
  friend bool operator==(const PitchRange&, const PitchRange&) = default;
};

struct MeasurePlan {
  int index = 0;
  std::set<std::string> instruments;
  std::optional<PitchRange> pitch_range;
  Density density = Density::low;
  Rational tempo_qpm{120};
  TimeSignature time_signature;
  KeySignature key_signature;
  std::set<int> chord_pcs;
  std::optional<std::string> dynamics;

  friend bool operator==(const MeasurePlan&, const MeasurePlan&) = default;
};

struct PlanDocument {
  int n_measures = 0;
  std::optional<std::string> genre;
  std::set<std::string> instrumentation;
  std::vector<MeasurePlan> measures;  // dense (all N) or sparse (strictly increasing indices)

  bool is_dense() const {
    if (measures.size() != static_cast<std::size_t>(n_measures)) return false;
    for (std::size_t i = 0; i < measures.size(); ++i)
      if (measures[i].index != static_cast<int>(i)) return false;
    return true;
  }

  friend bool operator==(const PlanDocument&, const PlanDocument&) = default;
};

/// Notes-per-quarter thresholds for the density label. Chords count once.
struct DensityThresholds {
  Rational low_below{1};         // rate < low_below -> low
  Rational high_above{5, 2};     // rate > high_above -> high, otherwise medium

  Density classify(const Rational& notes_per_quarter) const {
    if (notes_per_quarter < low_below) return Density::low;
    if (notes_per_quarter > high_above) return Density::high;
    return Density::medium;
  }
};

inline const Rational kDefaultTempoQpm{120};

/// Dense plan of a validated score: one MeasurePlan per measure.
inline PlanDocument extract_plan(const Score& score, const ConstraintTable& table,
                                 const DensityThresholds& thresholds = {}) {
  if (score.parts.empty() || score.measure_count <= 0) throw EmptyScoreError("score has no measures");

  std::vector<std::string> names;
  names.reserve(score.parts.size());
  for (const auto& p : score.parts) names.push_back(bind_instrument(p, table).instrument);

  PlanDocument plan;
  plan.n_measures = score.measure_count;
  plan.genre = score.genre;

  const Part* reference = &score.parts.front();
  for (const auto& p : score.parts)
    if (p.measures.size() > reference->measures.size()) reference = &p;

  for (int i = 0; i < score.measure_count; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    const Measure& ref = reference->measures[idx];
    MeasurePlan mp;
    mp.index = i;
    mp.time_signature = ref.time_signature;
    mp.key_signature = ref.key_signature;
    mp.tempo_qpm = ref.tempo_qpm.value_or(kDefaultTempoQpm);

    std::int64_t events = 0;
    std::optional<Rational> dyn_onset;
    for (std::size_t k = 0; k < score.parts.size(); ++k) {
      const Part& part = score.parts[k];
      if (idx >= part.measures.size()) continue;
      const Measure& m = part.measures[idx];
      if (!m.notes.empty()) mp.instruments.insert(names[k]);
      for (const auto& e : m.notes) {
        ++events;
        for (const auto& h : e.heads) {
          int midi = h.midi();
          if (!mp.pitch_range) {
            mp.pitch_range = PitchRange{midi, midi};
          } else {
            mp.pitch_range->min_midi = std::min(mp.pitch_range->min_midi, midi);
            mp.pitch_range->max_midi = std::max(mp.pitch_range->max_midi, midi);
          }
          mp.chord_pcs.insert(pitch_class(midi));
        }
        if (e.dynamic && (!dyn_onset || e.onset >= *dyn_onset)) {
          dyn_onset = e.onset;
          mp.dynamics = e.dynamic;
        }
      }
    }
    mp.density = thresholds.classify(Rational(events) / mp.time_signature.capacity());
    plan.instrumentation.insert(mp.instruments.begin(), mp.instruments.end());
    plan.measures.push_back(std::move(mp));
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Pivot selection

/// Change channels compared between a measure and its predecessor.
enum Channel : std::size_t { kTempo, kTimeSig, kKeySig, kInstruments, kDensity, kRange, kDynamics, kChannelCount };

inline constexpr std::array<const char*, kChannelCount> kChannelNames{
    "tempo", "time_signature", "key_signature", "instruments", "density", "pitch_range", "dynamics"};

struct WeightProfile {
  std::string id;
  std::array<Rational, kChannelCount> weights;  // sums to 1
};

/// Fixed weighting profiles: rhythm, harmony and timbre priority.
inline const std::vector<WeightProfile>& weight_profiles() {
  static const std::vector<WeightProfile> profiles{{
      // tempo, time sig, key sig, instruments, density, range, dynamics
      {"rhythm", {Rational(35, 100), Rational(25, 100), Rational(15, 400), Rational(15, 400), Rational(25, 100),
                  Rational(15, 400), Rational(15, 400)}},
      {"harmony", {Rational(30, 400), Rational(30, 400), Rational(35, 100), Rational(30, 400), Rational(10, 100),
                   Rational(25, 100), Rational(30, 400)}},
      {"timbre", {Rational(7, 100), Rational(7, 100), Rational(7, 100), Rational(40, 100), Rational(7, 100),
                  Rational(7, 100), Rational(25, 100)}},
  }};
  return profiles;
}

struct PivotSelection {
  std::vector<int> indices;       // selected measures, ascending
  std::vector<Rational> scores;   // change score of each selected index
  std::vector<int> ranking;       // measures 1..N-1 by descending change score (ties: lower index)
  std::vector<Rational> measure_scores;  // change score of every measure
  std::string weight_profile_id;
  std::uint64_t rng_seed = 0;
};

inline int density_level(Density d) { return static_cast<int>(d); }

/// Per-channel change of `cur` against `prev`, each in [0, 1]. A missing predecessor fires every channel.
inline std::array<Rational, kChannelCount> change_vector(const MeasurePlan* prev, const MeasurePlan& cur,
                                                         const Rational& max_tempo, std::size_t total_instruments) {
  std::array<Rational, kChannelCount> v{};
  if (prev == nullptr) {
    v.fill(Rational(1));
    return v;
  }
  v[kTempo] = max_tempo > 0 ? abs(cur.tempo_qpm - prev->tempo_qpm) / max_tempo : Rational(0);
  v[kTimeSig] = cur.time_signature == prev->time_signature ? 0 : 1;
  v[kKeySig] = cur.key_signature == prev->key_signature ? 0 : 1;
  if (total_instruments > 0) {
    std::size_t diff = 0;
    for (const auto& n : cur.instruments) diff += prev->instruments.count(n) == 0;
    for (const auto& n : prev->instruments) diff += cur.instruments.count(n) == 0;
    v[kInstruments] = Rational(static_cast<std::int64_t>(diff), static_cast<std::int64_t>(total_instruments));
  }
  v[kDensity] = Rational(std::abs(density_level(cur.density) - density_level(prev->density)), 2);
  if (cur.pitch_range.has_value() != prev->pitch_range.has_value()) {
    v[kRange] = 1;
  } else if (cur.pitch_range) {
    int shift = std::max(std::abs(cur.pitch_range->min_midi - prev->pitch_range->min_midi),
                         std::abs(cur.pitch_range->max_midi - prev->pitch_range->max_midi));
    v[kRange] = Rational(shift, 127);
  }
  v[kDynamics] = cur.dynamics == prev->dynamics ? 0 : 1;
  return v;
}

/// Selects 5-10 pivot measures (clamped to N). The seed picks the weighting profile
/// (seed mod profile count) and the count k = 5 + seed mod 6.
inline PivotSelection select_pivots(const PlanDocument& plan, std::uint64_t seed,
                                    const std::vector<WeightProfile>& profiles = weight_profiles()) {
  if (!plan.is_dense() || plan.n_measures < 1) throw std::invalid_argument("pivot selection needs a dense plan");
  if (profiles.empty()) throw std::invalid_argument("no weighting profiles");
  const auto& profile = profiles[seed % profiles.size()];
  std::size_t k = std::min<std::size_t>(5 + seed % 6, plan.measures.size());

  Rational max_tempo{0};
  for (const auto& m : plan.measures) max_tempo = std::max(max_tempo, m.tempo_qpm);

  PivotSelection sel;
  sel.weight_profile_id = profile.id;
  sel.rng_seed = seed;
  for (std::size_t i = 0; i < plan.measures.size(); ++i) {
    const MeasurePlan* prev = i == 0 ? nullptr : &plan.measures[i - 1];
    auto delta = change_vector(prev, plan.measures[i], max_tempo, plan.instrumentation.size());
    Rational score{0};
    for (std::size_t c = 0; c < kChannelCount; ++c) score += profile.weights[c] * delta[c];
    sel.measure_scores.push_back(score);
  }

  auto by_score = [&](int a, int b) {
    const auto& sa = sel.measure_scores[static_cast<std::size_t>(a)];
    const auto& sb = sel.measure_scores[static_cast<std::size_t>(b)];
    return sa > sb || (sa == sb && a < b);
  };
  std::vector<int> all(plan.measures.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  std::stable_sort(all.begin(), all.end(), by_score);

  sel.ranking.assign(all.begin(), all.end());
  sel.ranking.erase(std::remove(sel.ranking.begin(), sel.ranking.end(), 0), sel.ranking.end());

  sel.indices.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(sel.indices.begin(), sel.indices.end());
  for (int i : sel.indices) sel.scores.push_back(sel.measure_scores[static_cast<std::size_t>(i)]);
  return sel;
}

/// The sparse plan holding only the selected measures.
inline PlanDocument sparse_plan(const PlanDocument& dense, const PivotSelection& sel) {
  PlanDocument out;
  out.n_measures = dense.n_measures;
  out.genre = dense.genre;
  out.instrumentation = dense.instrumentation;
  for (int i : sel.indices) out.measures.push_back(dense.measures.at(static_cast<std::size_t>(i)));
  return out;
}

// ---------------------------------------------------------------------------
// JSON interchange

inline constexpr int kPlanSchemaVersion = 1;

/// Schema violation; path() is the JSON pointer of the first offending value.
class SchemaError : public Error {
 public:
  SchemaError(std::string path, const std::string& message)
      : Error(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

inline nlohmann::json tempo_to_json(const Rational& qpm) {
  if (is_integer(qpm)) return qpm.numerator();
  return to_double(qpm);
}

inline nlohmann::json to_json(const MeasurePlan& m) {
  nlohmann::json j;
  j["index"] = m.index;
  j["instruments"] = std::vector<std::string>(m.instruments.begin(), m.instruments.end());
  if (m.pitch_range)
    j["pitch_range"] = {m.pitch_range->min_midi, m.pitch_range->max_midi};
  else
    j["pitch_range"] = nullptr;
  j["density"] = to_string(m.density);
  j["tempo_qpm"] = tempo_to_json(m.tempo_qpm);
  j["time_signature"] = m.time_signature.to_string();
  j["key_signature"] = {{"tonic", m.key_signature.tonic.to_string()},
                        {"mode", m.key_signature.mode == Mode::major ? "major" : "minor"}};
  j["chord_pcs"] = std::vector<int>(m.chord_pcs.begin(), m.chord_pcs.end());
  if (m.dynamics)
    j["dynamics"] = *m.dynamics;
  else
    j["dynamics"] = nullptr;
  return j;
}

inline nlohmann::json to_json(const PlanDocument& plan) {
  nlohmann::json j;
  j["schema_version"] = kPlanSchemaVersion;
  j["n_measures"] = plan.n_measures;
  if (plan.genre)
    j["genre"] = *plan.genre;
  else
    j["genre"] = nullptr;
  j["instrumentation"] = std::vector<std::string>(plan.instrumentation.begin(), plan.instrumentation.end());
  j["measures"] = nlohmann::json::array();
  for (const auto& m : plan.measures) j["measures"].push_back(to_json(m));
  return j;
}

/// Canonical serialization: sorted keys, measures in index order.
inline std::string write_plan(const PlanDocument& plan) { return to_json(plan).dump(2) + "\n"; }

namespace detail {

inline void require(bool ok, const std::string& path, const std::string& message) {
  if (!ok) throw SchemaError(path, message);
}

inline void allow_keys(const nlohmann::json& obj, const std::string& path, std::initializer_list<const char*> keys) {
  for (const auto& [k, v] : obj.items()) {
    bool known = false;
    for (const char* allowed : keys) known = known || k == allowed;
    require(known, path + "/" + k, "unknown field");
  }
}

inline const nlohmann::json& field(const nlohmann::json& obj, const std::string& path, const char* key) {
  require(obj.contains(key), path + "/" + key, "missing field");
  return obj.at(key);
}

inline Tonic parse_tonic(const std::string& s, const std::string& path) {
  require(!s.empty(), path, "empty tonic");
  auto st = step_from_letter(s[0]);
  require(st.has_value() && std::isupper(static_cast<unsigned char>(s[0])), path, "bad tonic '" + s + "'");
  Tonic t{*st, 0};
  for (std::size_t i = 1; i < s.size(); ++i) {
    require(s[i] == '#' || s[i] == 'b', path, "bad tonic '" + s + "'");
    t.alter += s[i] == '#' ? 1 : -1;
  }
  require(t.alter >= -1 && t.alter <= 1, path, "bad tonic '" + s + "'");
  return t;
}

inline TimeSignature parse_time_signature(const std::string& s, const std::string& path) {
  auto slash = s.find('/');
  require(slash != std::string::npos && slash > 0 && slash + 1 < s.size(), path, "expected \"N/D\"");
  auto digits = [](const std::string& x) { return x.find_first_not_of("0123456789") == std::string::npos && x.size() <= 3; };
  std::string top = s.substr(0, slash), bottom = s.substr(slash + 1);
  require(digits(top) && digits(bottom), path, "expected \"N/D\"");
  TimeSignature ts{std::stoi(top), std::stoi(bottom)};
  require(ts.numerator > 0 && is_power_of_two(ts.denominator), path, "bad time signature");
  return ts;
}

inline MeasurePlan measure_from_json(const nlohmann::json& j, const std::string& path) {
  require(j.is_object(), path, "expected object");
  allow_keys(j, path, {"index", "instruments", "pitch_range", "density", "tempo_qpm", "time_signature",
                       "key_signature", "chord_pcs", "dynamics"});
  MeasurePlan m;
  const auto& idx = field(j, path, "index");
  require(idx.is_number_integer(), path + "/index", "expected integer");
  m.index = idx.get<int>();

  const auto& inst = field(j, path, "instruments");
  require(inst.is_array(), path + "/instruments", "expected array");
  for (std::size_t k = 0; k < inst.size(); ++k) {
    require(inst[k].is_string(), path + "/instruments/" + std::to_string(k), "expected string");
    m.instruments.insert(inst[k].get<std::string>());
  }

  const auto& range = field(j, path, "pitch_range");
  if (!range.is_null()) {
    require(range.is_array() && range.size() == 2, path + "/pitch_range", "expected [min, max] or null");
    for (std::size_t k = 0; k < 2; ++k)
      require(range[k].is_number_integer() && range[k].get<int>() >= 0 && range[k].get<int>() <= 127,
              path + "/pitch_range/" + std::to_string(k), "expected MIDI number 0-127");
    m.pitch_range = PitchRange{range[0].get<int>(), range[1].get<int>()};
    require(m.pitch_range->min_midi <= m.pitch_range->max_midi, path + "/pitch_range", "min > max");
  }

  const auto& dens = field(j, path, "density");
  require(dens.is_string(), path + "/density", "expected string");
  std::string d = dens.get<std::string>();
  if (d == "low")
    m.density = Density::low;
  else if (d == "medium")
    m.density = Density::medium;
  else if (d == "high")
    m.density = Density::high;
  else
    throw SchemaError(path + "/density", "expected low|medium|high");

  const auto& tempo = field(j, path, "tempo_qpm");
  require(tempo.is_number(), path + "/tempo_qpm", "expected number");
  m.tempo_qpm = tempo.is_number_integer() ? Rational(tempo.get<std::int64_t>())
                                          : rational_from_double(tempo.get<double>());
  require(m.tempo_qpm > 0, path + "/tempo_qpm", "tempo must be positive");

  const auto& ts = field(j, path, "time_signature");
  require(ts.is_string(), path + "/time_signature", "expected string");
  m.time_signature = parse_time_signature(ts.get<std::string>(), path + "/time_signature");

  const auto& ks = field(j, path, "key_signature");
  std::string kpath = path + "/key_signature";
  require(ks.is_object(), kpath, "expected object");
  allow_keys(ks, kpath, {"tonic", "mode"});
  const auto& tonic = field(ks, kpath, "tonic");
  require(tonic.is_string(), kpath + "/tonic", "expected string");
  const auto& mode = field(ks, kpath, "mode");
  require(mode.is_string() && (mode == "major" || mode == "minor"), kpath + "/mode", "expected major|minor");
  try {
    m.key_signature = KeySignature::from_tonic(parse_tonic(tonic.get<std::string>(), kpath + "/tonic"),
                                               mode == "major" ? Mode::major : Mode::minor);
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    throw SchemaError(kpath, e.what());
  }

  const auto& pcs = field(j, path, "chord_pcs");
  require(pcs.is_array(), path + "/chord_pcs", "expected array");
  for (std::size_t k = 0; k < pcs.size(); ++k) {
    require(pcs[k].is_number_integer() && pcs[k].get<int>() >= 0 && pcs[k].get<int>() <= 11,
            path + "/chord_pcs/" + std::to_string(k), "expected pitch class 0-11");
    m.chord_pcs.insert(pcs[k].get<int>());
  }

  const auto& dyn = field(j, path, "dynamics");
  require(dyn.is_null() || dyn.is_string(), path + "/dynamics", "expected string or null");
  if (dyn.is_string()) m.dynamics = dyn.get<std::string>();
  return m;
}

}  // namespace detail

inline PlanDocument plan_from_json(const nlohmann::json& j) {
  using detail::require;
  require(j.is_object(), "", "expected object");
  detail::allow_keys(j, "", {"schema_version", "n_measures", "genre", "instrumentation", "measures"});
  if (j.contains("schema_version"))
    require(j.at("schema_version") == kPlanSchemaVersion, "/schema_version", "unsupported schema version");

  PlanDocument plan;
  const auto& n = detail::field(j, "", "n_measures");
  require(n.is_number_integer() && n.get<std::int64_t>() > 0, "/n_measures", "expected positive integer");
  plan.n_measures = n.get<int>();

  const auto& genre = detail::field(j, "", "genre");
  require(genre.is_null() || genre.is_string(), "/genre", "expected string or null");
  if (genre.is_string()) plan.genre = genre.get<std::string>();

  const auto& inst = detail::field(j, "", "instrumentation");
  require(inst.is_array(), "/instrumentation", "expected array");
  for (std::size_t k = 0; k < inst.size(); ++k) {
    require(inst[k].is_string(), "/instrumentation/" + std::to_string(k), "expected string");
    plan.instrumentation.insert(inst[k].get<std::string>());
  }

  const auto& measures = detail::field(j, "", "measures");
  require(measures.is_array(), "/measures", "expected array");
  int previous = -1;
  for (std::size_t k = 0; k < measures.size(); ++k) {
    std::string path = "/measures/" + std::to_string(k);
    MeasurePlan m = detail::measure_from_json(measures[k], path);
    require(m.index >= 0 && m.index < plan.n_measures, path + "/index", "index out of range [0, n_measures)");
    require(m.index > previous, path + "/index", "indices must be strictly increasing");
    previous = m.index;
    std::size_t pos = 0;
    for (const auto& name : m.instruments) {
      require(plan.instrumentation.count(name) > 0, path + "/instruments/" + std::to_string(pos),
              "instrument not in instrumentation");
      ++pos;
    }
    plan.measures.push_back(std::move(m));
  }
  return plan;
}

/// Parses plan JSON; throws SchemaError naming the first violation.
inline PlanDocument read_plan(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("", std::string("malformed JSON: ") + e.what());
  }
  return plan_from_json(j);
}

}  // namespace scorelint
