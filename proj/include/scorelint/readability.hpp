#pragma once

// Engraving clarity: rhythmic jitter, tie complexity, accidental consistency, enharmonic direction.

#include "scorelint/instruments.hpp"
#include "scorelint/metrics_common.hpp"

#include <string>
#include <vector>

namespace scorelint {

inline const Rational kJitterGrid{1, 16};  // a 64th note, in quarters

struct JitterOptions {
  bool strict = false;  // judge tuplet notes against the plain 64th grid too
};

/// True when the note is a quantization artefact: too short, or off the 64th grid.
inline bool jitter_flagged(const NoteEvent& e, const JitterOptions& opts = {}) {
  if (e.duration <= kJitterGrid) return true;
  if (e.tuplet && !opts.strict) {
    Rational grid = kJitterGrid * Rational(e.tuplet->q, e.tuplet->p);
    return !is_multiple_of(e.tuplet->group_onset, kJitterGrid) || !is_multiple_of(e.onset - e.tuplet->group_onset, grid);
  }
  return !is_multiple_of(e.onset, kJitterGrid);
}

inline Pct rhythmic_jitter_score(const Part& part, const JitterOptions& opts = {}) {
  std::int64_t total = 0, ok = 0;
  for (const auto& m : part.measures)
    for (const auto& e : m.notes) {
      ++total;
      ok += !jitter_flagged(e, opts);
    }
  if (total == 0) return std::nullopt;
  return percent(ok, total);
}

/// 1 - tied/total, where every event touching a tie counts as tied.
inline Pct tie_complexity_score(const Part& part) {
  std::int64_t total = 0, tied = 0;
  for (const auto& m : part.measures)
    for (const auto& e : m.notes) {
      ++total;
      tied += e.is_tied();
    }
  if (total == 0) return std::nullopt;
  return percent(total - tied, total);
}

/// Share of pitches diatonic to the measure's key (minor keys use natural minor).
inline Pct accidental_consistency_score(const Part& part) {
  std::int64_t total = 0, ok = 0;
  for (const auto& m : part.measures) {
    auto scale = diatonic_pitch_classes(m.key_signature);
    for (const auto& e : m.notes)
      for (const auto& h : e.heads) {
        ++total;
        ok += scale.count(pitch_class(h.midi())) > 0;
      }
  }
  if (total == 0) return std::nullopt;
  return percent(ok, total);
}

/// Flats written in sharp keys, or sharps in flat keys, among explicit accidentals. 100 if there are none.
inline Pct enharmonic_directionality_score(const Part& part) {
  std::int64_t total = 0, violations = 0;
  for (const auto& m : part.measures) {
    KeyDirection dir = key_direction(m.key_signature);
    for (const auto& e : m.notes)
      for (const auto& h : e.heads) {
        if (!h.explicit_accidental) continue;
        ++total;
        int alter = h.pitch.alter;
        violations += (dir == KeyDirection::sharp && alter < 0) || (dir == KeyDirection::flat && alter > 0);
      }
  }
  if (total == 0) return Rational(100);
  return percent(total - violations, total);
}

struct PartReadability {
  std::string part_id;
  std::string instrument;
  bool active = false;
  Pct jitter;
  Pct tie_complexity;
  Pct accidental_consistency;
  Pct enharmonic;

  std::vector<Pct> constituents() const { return {jitter, tie_complexity, accidental_consistency, enharmonic}; }
};

struct ReadabilityResult {
  std::vector<PartReadability> parts;
  Pct total;
};

inline PartReadability part_readability(const Part& part, std::string instrument, const JitterOptions& opts = {}) {
  PartReadability r;
  r.part_id = part.part_id;
  r.instrument = std::move(instrument);
  r.active = part.has_notes();
  r.jitter = rhythmic_jitter_score(part, opts);
  r.tie_complexity = tie_complexity_score(part);
  r.accidental_consistency = accidental_consistency_score(part);
  r.enharmonic = enharmonic_directionality_score(part);
  return r;
}

inline Rational total_readability(const std::vector<PartReadability>& parts) {
  std::vector<Pct> all;
  for (const auto& p : parts) {
    if (!p.active) continue;
    for (const auto& v : p.constituents()) all.push_back(v);
  }
  return macro_average(all);
}

inline ReadabilityResult evaluate_readability(const Score& score, const ConstraintTable& table,
                                              const JitterOptions& opts = {}) {
  ReadabilityResult result;
  for (const auto& part : score.parts)
    result.parts.push_back(part_readability(part, bind_instrument(part, table).instrument, opts));
  try {
    result.total = total_readability(result.parts);
  } catch (const NoApplicableMetrics&) {
    result.total = std::nullopt;
  }
  return result;
}

}  // namespace scorelint
