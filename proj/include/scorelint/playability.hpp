#pragma once

// Violation-based playability: pitch range, chord span, monophony and rhythmic overlap.

#include "scorelint/instruments.hpp"
#include "scorelint/metrics_common.hpp"

#include <map>
#include <string>
#include <vector>

namespace scorelint {

/// Share of pitches within [L, U]; each chord member counts once.
inline Pct pitch_range_score(const Part& part, const InstrumentConstraints& c) {
  std::int64_t total = 0, ok = 0;
  for (const auto& m : part.measures)
    for (const auto& e : m.notes)
      for (const auto& h : e.heads) {
        int midi = h.midi();
        ++total;
        ok += midi >= c.lowest_midi && midi <= c.highest_midi;
      }
  if (total == 0) return std::nullopt;
  return percent(ok, total);
}

/// Share of chords whose span is within S_max.
inline Pct pitch_span_score(const Part& part, const InstrumentConstraints& c) {
  std::int64_t chords = 0, ok = 0;
  for (const auto& m : part.measures)
    for (const auto& e : m.notes) {
      if (!e.is_chord()) continue;
      int lo = 127, hi = 0;
      for (const auto& h : e.heads) {
        lo = std::min(lo, h.midi());
        hi = std::max(hi, h.midi());
      }
      ++chords;
      ok += !c.max_span_semitones || hi - lo <= *c.max_span_semitones;
    }
  if (chords == 0) return std::nullopt;
  return percent(ok, chords);
}

/// Share of distinct onset instants at which exactly one pitch sounds. Monophonic instruments only.
inline Pct monophonic_score(const Part& part, const InstrumentConstraints& c) {
  if (!c.monophonic) return std::nullopt;
  auto events = absolute_events(part);
  if (events.empty()) return std::nullopt;
  std::int64_t steps = 0, single = 0;
  std::vector<const AbsoluteEvent*> sounding;
  std::size_t next = 0;
  while (next < events.size()) {
    const Rational t = events[next].onset;
    std::erase_if(sounding, [&](const AbsoluteEvent* e) { return e->offset() <= t; });
    for (; next < events.size() && events[next].onset == t; ++next) sounding.push_back(&events[next]);
    std::size_t pitches = 0;
    for (const auto* e : sounding) pitches += e->event->heads.size();
    ++steps;
    single += pitches == 1;
  }
  return percent(single, steps);
}

/// Tie chains collapsed into single notes, in onset order.
inline std::vector<AbsoluteEvent> merge_ties(const std::vector<AbsoluteEvent>& events) {
  std::vector<AbsoluteEvent> out;
  std::vector<bool> open;  // parallel to out: last piece of the chain has tie_forward
  for (const auto& e : events) {
    bool merged = false;
    if (e.event->tie_backward) {
      for (std::size_t k = out.size(); k-- > 0;) {
        if (open[k] && out[k].offset() == e.onset && out[k].event->heads.size() == e.event->heads.size()) {
          out[k].duration += e.duration;
          open[k] = e.event->tie_forward;
          merged = true;
          break;
        }
      }
    }
    if (!merged) {
      out.push_back(e);
      open.push_back(e.event->tie_forward);
    }
  }
  return out;
}

/// 1 - share of consecutive pairs where a note starts before the previous note ends. Monophonic only.
inline Pct rhythmic_overlap_score(const Part& part, const InstrumentConstraints& c) {
  if (!c.monophonic) return std::nullopt;
  auto notes = merge_ties(absolute_events(part));
  if (notes.size() < 2) return std::nullopt;
  std::int64_t violations = 0;
  for (std::size_t i = 1; i < notes.size(); ++i) violations += notes[i].onset < notes[i - 1].offset();
  auto pairs = static_cast<std::int64_t>(notes.size() - 1);
  return percent(pairs - violations, pairs);
}

struct PartPlayability {
  std::string part_id;
  std::string instrument;
  bool resolved = true;  // false when the permissive fallback constraints were used
  bool active = false;   // the part has at least one note
  Pct pitch_range;
  Pct pitch_span;
  Pct monophonic;
  Pct overlap;

  std::vector<Pct> constituents() const { return {pitch_range, pitch_span, monophonic, overlap}; }
};

struct PlayabilityResult {
  std::vector<PartPlayability> parts;
  Pct total;  // nullopt when nothing is applicable
  std::vector<std::string> warnings;
};

inline PartPlayability part_playability(const Part& part, const InstrumentBinding& binding) {
  PartPlayability r;
  r.part_id = part.part_id;
  r.instrument = binding.instrument;
  r.resolved = binding.via != Binding::unresolved;
  r.active = part.has_notes();
  r.pitch_range = pitch_range_score(part, binding.constraints);
  r.pitch_span = pitch_span_score(part, binding.constraints);
  r.monophonic = monophonic_score(part, binding.constraints);
  r.overlap = rhythmic_overlap_score(part, binding.constraints);
  return r;
}

/// Macro-average over every applicable constituent of every active part.
inline Rational total_playability(const std::vector<PartPlayability>& parts) {
  std::vector<Pct> all;
  for (const auto& p : parts) {
    if (!p.active) continue;
    for (const auto& v : p.constituents()) all.push_back(v);
  }
  return macro_average(all);
}

inline PlayabilityResult evaluate_playability(const Score& score, const ConstraintTable& table) {
  PlayabilityResult result;
  for (const auto& part : score.parts) {
    auto binding = bind_instrument(part, table);
    if (binding.via == Binding::unresolved)
      result.warnings.push_back("part '" + part.part_id + "': unknown instrument '" + binding.instrument +
                                "', using permissive constraints");
    result.parts.push_back(part_playability(part, binding));
  }
  try {
    result.total = total_playability(result.parts);
  } catch (const NoApplicableMetrics&) {
    result.total = std::nullopt;
  }
  return result;
}

}  // namespace scorelint
