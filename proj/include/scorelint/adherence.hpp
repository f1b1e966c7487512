#pragma once

// Instrument utilization (coverage and active density) and plan-versus-score metadata matching.

#include "scorelint/instruments.hpp"
#include "scorelint/metrics_common.hpp"
#include "scorelint/plan.hpp"

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace scorelint {

// ---------------------------------------------------------------------------
// Utilization

/// First and last note-bearing measure, or nullopt for a silent part.
inline std::optional<std::pair<int, int>> active_span(const Part& part) {
  std::optional<std::pair<int, int>> span;
  for (std::size_t i = 0; i < part.measures.size(); ++i) {
    if (part.measures[i].notes.empty()) continue;
    int idx = static_cast<int>(i);
    if (!span) span = std::make_pair(idx, idx);
    span->second = idx;
  }
  return span;
}

/// (m_last - m_first + 1) / M_total; 0 for a part with no notes.
inline Rational coverage_ratio(const Part& part, int total_measures) {
  auto span = active_span(part);
  if (!span || total_measures <= 0) return Rational(0);
  return percent(span->second - span->first + 1, total_measures);
}

/// |M_active| / M_total.
inline Rational active_density(const Part& part, int total_measures) {
  if (total_measures <= 0) return Rational(0);
  std::int64_t active = 0;
  for (const auto& m : part.measures) active += !m.notes.empty();
  return percent(active, total_measures);
}

struct PartUtilization {
  std::string part_id;
  std::string instrument;
  std::optional<int> m_first;
  std::optional<int> m_last;
  std::int64_t active_measure_count = 0;
  Rational coverage_pct{0};
  Rational density_pct{0};
};

struct UtilizationResult {
  std::vector<PartUtilization> parts;
  std::optional<Rational> mean_coverage_pct;  // over all parts, silent ones included
  std::optional<Rational> mean_density_pct;
};

inline UtilizationResult evaluate_utilization(const Score& score, const ConstraintTable& table) {
  UtilizationResult result;
  Rational cov{0}, dens{0};
  for (const auto& part : score.parts) {
    PartUtilization u;
    u.part_id = part.part_id;
    u.instrument = bind_instrument(part, table).instrument;
    if (auto span = active_span(part)) {
      u.m_first = span->first;
      u.m_last = span->second;
    }
    for (const auto& m : part.measures) u.active_measure_count += !m.notes.empty();
    u.coverage_pct = coverage_ratio(part, score.measure_count);
    u.density_pct = active_density(part, score.measure_count);
    cov += u.coverage_pct;
    dens += u.density_pct;
    result.parts.push_back(std::move(u));
  }
  if (!result.parts.empty()) {
    auto n = static_cast<std::int64_t>(result.parts.size());
    result.mean_coverage_pct = cov / n;
    result.mean_density_pct = dens / n;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Metadata matching

inline const Rational kDefaultTempoTolerance{1, 50};  // 2% relative

struct TempoMatch {
  bool match = false;
  bool near_miss = false;  // would match after doubling or halving the beat unit
  Rational plan_qpm{0};
  std::optional<Rational> score_qpm;
  std::vector<std::string> warnings;
};

inline bool tempo_within(const Rational& expected, const Rational& actual, const Rational& tolerance) {
  return abs(actual - expected) <= tolerance * expected;
}

/// Both values are quarter notes per minute.
inline TempoMatch tempo_match(const Rational& plan_qpm, const std::optional<Rational>& score_qpm,
                              const Rational& tolerance = kDefaultTempoTolerance) {
  TempoMatch r;
  r.plan_qpm = plan_qpm;
  r.score_qpm = score_qpm;
  if (!score_qpm) {
    r.warnings.push_back("MissingTempo: score declares no tempo");
    return r;
  }
  r.match = tempo_within(plan_qpm, *score_qpm, tolerance);
  if (!r.match)
    r.near_miss = tempo_within(plan_qpm, *score_qpm * 2, tolerance) ||
                  tempo_within(plan_qpm, *score_qpm / 2, tolerance);
  return r;
}

/// First tempo declared anywhere in the score, by measure order.
inline std::optional<Rational> first_tempo(const Score& score) {
  for (int i = 0; i < score.measure_count; ++i)
    for (const auto& p : score.parts)
      if (static_cast<std::size_t>(i) < p.measures.size() && p.measures[static_cast<std::size_t>(i)].tempo_qpm)
        return p.measures[static_cast<std::size_t>(i)].tempo_qpm;
  return std::nullopt;
}

enum class KeyEquivalence { none, relative, exact };

inline const char* to_string(KeyEquivalence k) {
  switch (k) {
    case KeyEquivalence::exact: return "exact";
    case KeyEquivalence::relative: return "relative";
    case KeyEquivalence::none: return "none";
  }
  return "none";
}

struct KeyMatch {
  KeyEquivalence level = KeyEquivalence::none;
  bool match() const { return level != KeyEquivalence::none; }
};

inline KeyMatch key_match(const KeySignature& plan_key, const KeySignature& score_key) {
  if (plan_key.tonic == score_key.tonic && plan_key.mode == score_key.mode) return {KeyEquivalence::exact};
  if (plan_key.fifths == score_key.fifths) return {KeyEquivalence::relative};
  return {KeyEquivalence::none};
}

inline bool time_match(const TimeSignature& plan_ts, const TimeSignature& score_ts) {
  return plan_ts.numerator == score_ts.numerator && plan_ts.denominator == score_ts.denominator;
}

/// Pluggable same-instrument verdict for names the alias table cannot resolve.
/// Implementations may call out to an external judge; nullopt means "no opinion".
class InstrumentJudge {
 public:
  virtual ~InstrumentJudge() = default;
  virtual std::optional<bool> same_instrument(const std::string& a, const std::string& b) = 0;
};

/// The shipped judge: never has an opinion.
class NullJudge : public InstrumentJudge {
 public:
  std::optional<bool> same_instrument(const std::string&, const std::string&) override { return std::nullopt; }
};

struct NameResolution {
  std::string side;  // "plan" or "score"
  std::string raw;
  std::string resolved;
  std::string via;  // "alias", "verbatim" or "judge"
};

struct InstrumentMatch {
  Rational pct{0};
  std::set<std::string> plan_set;
  std::set<std::string> score_set;
  std::vector<NameResolution> trace;
};

/// Jaccard similarity of the canonical instrument sets, in percent. Two empty sets match fully.
inline InstrumentMatch instrument_match(const std::set<std::string>& plan_names,
                                        const std::set<std::string>& score_names, const ConstraintTable& table,
                                        InstrumentJudge* judge = nullptr) {
  InstrumentMatch r;
  std::set<std::string> plan_unresolved, score_unresolved;
  auto resolve = [&](const std::string& side, const std::string& name, std::set<std::string>& out,
                     std::set<std::string>& unresolved) {
    if (const auto* c = table.find_by_name(name)) {
      out.insert(c->canonical_name);
      r.trace.push_back({side, name, c->canonical_name, "alias"});
    } else {
      out.insert(name);
      unresolved.insert(name);
      r.trace.push_back({side, name, name, "verbatim"});
    }
  };
  for (const auto& n : plan_names) resolve("plan", n, r.plan_set, plan_unresolved);
  for (const auto& n : score_names) resolve("score", n, r.score_set, score_unresolved);

  if (judge != nullptr) {
    for (const auto& a : plan_unresolved) {
      for (const auto& b : r.score_set) {
        if (a == b || r.plan_set.count(b) > 0) continue;
        if (judge->same_instrument(a, b).value_or(false)) {
          r.plan_set.erase(a);
          r.plan_set.insert(b);
          r.trace.push_back({"plan", a, b, "judge"});
          break;
        }
      }
    }
  }

  std::size_t inter = 0;
  for (const auto& n : r.plan_set) inter += r.score_set.count(n);
  std::size_t uni = r.plan_set.size() + r.score_set.size() - inter;
  r.pct = uni == 0 ? Rational(100) : percent(static_cast<std::int64_t>(inter), static_cast<std::int64_t>(uni));
  return r;
}

struct AdherenceResult {
  TempoMatch tempo;
  KeyMatch key;
  KeySignature plan_key;
  KeySignature score_key;
  bool time_match = false;
  TimeSignature plan_time;
  TimeSignature score_time;
  InstrumentMatch instruments;
  std::vector<std::string> notes;  // mid-piece changes, reported but not scored
};

/// Compares the plan's first entry with the score's first measure.
inline AdherenceResult evaluate_adherence(const PlanDocument& plan, const Score& score, const ConstraintTable& table,
                                          const Rational& tempo_tolerance = kDefaultTempoTolerance,
                                          InstrumentJudge* judge = nullptr) {
  if (plan.measures.empty()) throw Error("plan has no measure entries");
  if (score.parts.empty() || score.parts.front().measures.empty()) throw EmptyScoreError("score has no measures");
  const MeasurePlan& intent = plan.measures.front();
  const Measure& first = score.parts.front().measures.front();

  AdherenceResult r;
  r.tempo = tempo_match(intent.tempo_qpm, first_tempo(score), tempo_tolerance);
  r.plan_key = intent.key_signature;
  r.score_key = first.key_signature;
  r.key = key_match(r.plan_key, r.score_key);
  r.plan_time = intent.time_signature;
  r.score_time = first.time_signature;
  r.time_match = time_match(r.plan_time, r.score_time);

  std::set<std::string> score_names;
  for (const auto& p : score.parts) score_names.insert(bind_instrument(p, table).instrument);
  r.instruments = instrument_match(plan.instrumentation, score_names, table, judge);

  const Part& lead = score.parts.front();
  for (std::size_t i = 1; i < lead.measures.size(); ++i) {
    const auto& prev = lead.measures[i - 1];
    const auto& cur = lead.measures[i];
    if (!(cur.key_signature == prev.key_signature))
      r.notes.push_back("key change to " + cur.key_signature.to_string() + " at measure " + std::to_string(i));
    if (!(cur.time_signature == prev.time_signature))
      r.notes.push_back("meter change to " + cur.time_signature.to_string() + " at measure " + std::to_string(i));
    if (cur.tempo_qpm != prev.tempo_qpm && cur.tempo_qpm)
      r.notes.push_back("tempo change to " + scorelint::to_string(*cur.tempo_qpm) + " qpm at measure " +
                        std::to_string(i));
  }
  return r;
}

}  // namespace scorelint
