#pragma once

// Seeded random score generators for property tests.

#include "scorelint/scorelint.hpp"

#include <random>
#include <string>
#include <vector>

namespace scorelint::gen {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }
  bool chance(double p) { return std::bernoulli_distribution(p)(gen_); }
  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<std::size_t>(uniform(0, static_cast<int>(v.size()) - 1))];
  }

 private:
  std::mt19937_64 gen_;
};

/// Spells a MIDI number, choosing randomly between sharp and flat names for black keys.
inline SpelledPitch spell_midi(int midi, Rng& rng) {
  struct Spelling {
    Step step;
    int alter;
  };
  static const std::vector<std::pair<Spelling, Spelling>> kByPc{
      {{Step::C, 0}, {Step::C, 0}},  {{Step::C, 1}, {Step::D, -1}}, {{Step::D, 0}, {Step::D, 0}},
      {{Step::D, 1}, {Step::E, -1}}, {{Step::E, 0}, {Step::E, 0}},  {{Step::F, 0}, {Step::F, 0}},
      {{Step::F, 1}, {Step::G, -1}}, {{Step::G, 0}, {Step::G, 0}},  {{Step::G, 1}, {Step::A, -1}},
      {{Step::A, 0}, {Step::A, 0}},  {{Step::A, 1}, {Step::B, -1}}, {{Step::B, 0}, {Step::B, 0}}};
  const auto& options = kByPc[static_cast<std::size_t>(pitch_class(midi))];
  Spelling s = rng.chance(0.5) ? options.first : options.second;
  int octave = (midi - pitch_class_of(s.step) - s.alter) / 12 - 1;
  return SpelledPitch{s.step, s.alter, octave};
}

struct RoundTripShape {
  int max_parts = 4;
  int max_measures = 16;
};

/// A grid-quantized, valid, writer-expressible score: full measures, aligned parts, global meter/key/tempo.
inline Score random_roundtrip_score(std::uint64_t seed, const RoundTripShape& shape = {}) {
  Rng rng(seed);
  static const std::vector<TimeSignature> kMeters{{4, 4}, {3, 4}, {2, 4}, {6, 8}, {3, 8}, {5, 4}, {2, 2}, {7, 8}};
  static const std::vector<Rational> kTempi{Rational(60), Rational(72), Rational(75), Rational(90), Rational(120),
                                            Rational(132), Rational(135, 2), Rational(180)};
  static const std::vector<Rational> kDurations{Rational(1, 4), Rational(1, 2), Rational(3, 4), Rational(1),
                                                Rational(3, 2), Rational(2), Rational(3), Rational(1, 8)};
  static const std::vector<std::string> kNames{"Flute", "Violin", "Viola", "Cello", "Piano", "Clarinet", "Horn"};

  Score score;
  score.title = "Random " + std::to_string(seed);
  int n_parts = rng.uniform(1, shape.max_parts);
  int n_measures = rng.uniform(1, shape.max_measures);
  score.measure_count = n_measures;

  std::vector<TimeSignature> meters;
  std::vector<KeySignature> keys;
  std::vector<std::optional<Rational>> tempi;
  TimeSignature ts = rng.pick(kMeters);
  KeySignature ks = KeySignature::from_fifths(rng.uniform(-7, 7), rng.chance(0.5) ? Mode::major : Mode::minor);
  std::optional<Rational> tempo;
  if (rng.chance(0.9)) tempo = rng.pick(kTempi);
  for (int i = 0; i < n_measures; ++i) {
    if (i > 0 && rng.chance(0.1)) ts = rng.pick(kMeters);
    if (i > 0 && rng.chance(0.1)) ks = KeySignature::from_fifths(rng.uniform(-7, 7), ks.mode);
    if (i > 0 && tempo && rng.chance(0.1)) tempo = rng.pick(kTempi);
    meters.push_back(ts);
    keys.push_back(ks);
    tempi.push_back(tempo);
  }

  for (int p = 0; p < n_parts; ++p) {
    Part part;
    part.part_id = "P" + std::to_string(p + 1);
    part.declared_name = rng.pick(kNames);
    if (rng.chance(0.3)) part.midi_program = rng.uniform(0, 127);
    std::optional<std::vector<int>> tie_pitches;  // pitches the next note must repeat
    for (int i = 0; i < n_measures; ++i) {
      Measure m;
      m.index = i;
      m.time_signature = meters[static_cast<std::size_t>(i)];
      m.key_signature = keys[static_cast<std::size_t>(i)];
      m.tempo_qpm = tempi[static_cast<std::size_t>(i)];
      Rational cap = m.time_signature.capacity();
      Rational t{0};
      while (t < cap) {
        Rational d = rng.pick(kDurations);
        if (t + d > cap) d = cap - t;
        bool last_in_piece = (i == n_measures - 1) && (t + d == cap);
        if (!tie_pitches && rng.chance(0.2)) {
          m.rests.push_back(RestEvent{t, d, false, std::nullopt, 0});
        } else {
          NoteEvent e;
          e.onset = t;
          e.duration = d;
          std::vector<int> midis;
          if (tie_pitches) {
            midis = *tie_pitches;
            e.tie_backward = true;
            tie_pitches.reset();
          } else {
            int root = rng.uniform(40, 84);
            midis.push_back(root);
            if (rng.chance(0.2)) midis.push_back(root + rng.uniform(3, 12));
            if (midis.size() > 1 && rng.chance(0.3)) midis.push_back(midis.back() + rng.uniform(1, 5));
          }
          for (int midi : midis) {
            NoteHead h;
            h.pitch = spell_midi(midi, rng);
            h.explicit_accidental = h.pitch.alter != m.key_signature.alter_for(h.pitch.step);
            e.heads.push_back(h);
          }
          if (!last_in_piece && rng.chance(0.15)) {
            e.tie_forward = true;
            tie_pitches = midis;
          }
          if (rng.chance(0.05)) e.dynamic = rng.chance(0.5) ? "p" : "ff";
          m.notes.push_back(std::move(e));
        }
        t += d;
      }
      part.measures.push_back(std::move(m));
    }
    score.parts.push_back(std::move(part));
  }
  return score;
}

struct PartShape {
  int max_measures = 6;
  int max_events = 8;          // per measure
  bool allow_off_grid = true;
  bool allow_overlap = true;
};

/// An arbitrary single part for metric oracles: chords, overlaps, ties, tuplets, off-grid onsets.
inline Part random_metric_part(Rng& rng, const PartShape& shape = {}) {
  static const std::vector<Rational> kDurations{Rational(1, 32), Rational(1, 16), Rational(1, 8), Rational(1, 4),
                                                Rational(1, 2),  Rational(1),     Rational(3, 2), Rational(2)};
  Part part;
  part.part_id = "X";
  int n_measures = rng.uniform(1, shape.max_measures);
  for (int i = 0; i < n_measures; ++i) {
    Measure m;
    m.index = i;
    m.time_signature = rng.chance(0.7) ? TimeSignature{4, 4} : TimeSignature{3, 4};
    m.key_signature = KeySignature::from_fifths(rng.uniform(-6, 6), rng.chance(0.6) ? Mode::major : Mode::minor);
    int n_events = rng.uniform(0, shape.max_events);
    Rational t{0};
    for (int k = 0; k < n_events; ++k) {
      NoteEvent e;
      e.duration = rng.pick(kDurations);
      if (shape.allow_off_grid && rng.chance(0.1)) {
        e.onset = t + Rational(rng.uniform(1, 5), 48);
      } else if (shape.allow_overlap && rng.chance(0.15) && t > 0) {
        e.onset = t - Rational(1, 4) < 0 ? Rational(0) : t - Rational(1, 4);
      } else {
        e.onset = t;
      }
      if (rng.chance(0.1)) {
        int p = 3, q = 2;
        Rational unit = Rational(1, 2);
        e.tuplet = TupletInfo{p, q, t};
        e.duration = unit * Rational(q, p);
        e.onset = t + e.duration * rng.uniform(0, 2);
      }
      int n_heads = rng.chance(0.25) ? rng.uniform(2, 4) : 1;
      int base = rng.uniform(30, 100);
      for (int h = 0; h < n_heads; ++h) {
        NoteHead head;
        head.pitch = spell_midi(std::min(127, base + h * rng.uniform(2, 9)), rng);
        head.explicit_accidental = rng.chance(0.3);
        e.heads.push_back(head);
      }
      e.tie_forward = rng.chance(0.1);
      e.tie_backward = rng.chance(0.1);
      t = e.onset + e.duration;
      m.notes.push_back(std::move(e));
    }
    sort_events(m);
    part.measures.push_back(std::move(m));
  }
  return part;
}

}  // namespace scorelint::gen
