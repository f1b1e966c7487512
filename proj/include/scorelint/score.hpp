#pragma once

// Score intermediate representation and the pitch/key theory shared by all metrics.

#include "scorelint/rational.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace scorelint {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyScoreError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Pitch

enum class Step : std::uint8_t { C, D, E, F, G, A, B };

inline constexpr std::array<int, 7> kStepPitchClass{0, 2, 4, 5, 7, 9, 11};
inline constexpr std::array<char, 7> kStepLetter{'C', 'D', 'E', 'F', 'G', 'A', 'B'};

inline int pitch_class_of(Step s) { return kStepPitchClass[static_cast<int>(s)]; }
inline char letter_of(Step s) { return kStepLetter[static_cast<int>(s)]; }

inline std::optional<Step> step_from_letter(char c) {
  switch (c) {
    case 'C': case 'c': return Step::C;
    case 'D': case 'd': return Step::D;
    case 'E': case 'e': return Step::E;
    case 'F': case 'f': return Step::F;
    case 'G': case 'g': return Step::G;
    case 'A': case 'a': return Step::A;
    case 'B': case 'b': return Step::B;
    default: return std::nullopt;
  }
}

/// A pitch as written: letter, alteration (-2..+2) and scientific octave (C4 = MIDI 60).
struct SpelledPitch {
  Step step = Step::C;
  int alter = 0;
  int octave = 4;

  int midi() const { return 12 * (octave + 1) + pitch_class_of(step) + alter; }

  friend bool operator==(const SpelledPitch&, const SpelledPitch&) = default;
};

inline int pitch_class(int midi) { return ((midi % 12) + 12) % 12; }

/// One written notehead of a note event.
struct NoteHead {
  SpelledPitch pitch;
  bool explicit_accidental = false;

  int midi() const { return pitch.midi(); }
};

/// Tuplet membership: p notes in the time of q, the group starting at group_onset.
struct TupletInfo {
  int p = 3;
  int q = 2;
  Rational group_onset{0};

  friend bool operator==(const TupletInfo&, const TupletInfo&) = default;
};

/// A sounding event. Onset and duration are in quarter notes, onset relative to the measure.
struct NoteEvent {
  Rational onset{0};
  Rational duration{1};
  std::vector<NoteHead> heads;
  bool tie_forward = false;
  bool tie_backward = false;
  std::optional<std::string> dynamic;
  std::optional<TupletInfo> tuplet;
  int layer = 0;  // voice-overlay layer, 0 = main line

  Rational offset() const { return onset + duration; }
  bool is_chord() const { return heads.size() > 1; }
  bool is_tied() const { return tie_forward || tie_backward; }
};

struct RestEvent {
  Rational onset{0};
  Rational duration{1};
  bool invisible = false;
  std::optional<TupletInfo> tuplet;
  int layer = 0;

  Rational offset() const { return onset + duration; }
};

// ---------------------------------------------------------------------------
// Signatures

struct TimeSignature {
  int numerator = 4;
  int denominator = 4;

  /// Measure capacity in quarter notes.
  Rational capacity() const { return Rational(4 * numerator, denominator); }
  std::string to_string() const { return std::to_string(numerator) + "/" + std::to_string(denominator); }

  friend bool operator==(const TimeSignature&, const TimeSignature&) = default;
};

enum class Mode : std::uint8_t { major, minor };

struct Tonic {
  Step step = Step::C;
  int alter = 0;

  int pitch_class() const { return scorelint::pitch_class(pitch_class_of(step) + alter); }
  std::string to_string() const {
    std::string s(1, letter_of(step));
    if (alter > 0) s += std::string(static_cast<std::size_t>(alter), '#');
    if (alter < 0) s += std::string(static_cast<std::size_t>(-alter), 'b');
    return s;
  }

  friend bool operator==(const Tonic&, const Tonic&) = default;
};

/// Position of a tonic on the circle of fifths (C = 0, G = 1, F = -1, F# = 6, ...).
inline int fifths_of_tonic(const Tonic& t) {
  static constexpr std::array<int, 7> kNatural{0, 2, 4, -1, 1, 3, 5};  // C D E F G A B
  return kNatural[static_cast<int>(t.step)] + 7 * t.alter;
}

/// Inverse of fifths_of_tonic.
inline Tonic tonic_of_fifths(int fifths) {
  static constexpr std::array<Step, 7> kOrder{Step::F, Step::C, Step::G, Step::D,
                                              Step::A, Step::E, Step::B};
  int shifted = fifths + 1;
  int idx = ((shifted % 7) + 7) % 7;
  int alter = (shifted - idx) / 7;
  return Tonic{kOrder[static_cast<std::size_t>(idx)], alter};
}

enum class KeyDirection : std::uint8_t { neutral, sharp, flat };

struct KeySignature {
  Tonic tonic;
  Mode mode = Mode::major;
  int fifths = 0;

  /// Builds a key from tonic and mode; throws if the key needs more than 7 sharps or flats.
  static KeySignature from_tonic(Tonic tonic, Mode mode) {
    int f = fifths_of_tonic(tonic) - (mode == Mode::minor ? 3 : 0);
    if (f < -7 || f > 7) throw Error("key " + tonic.to_string() + " out of range");
    return KeySignature{tonic, mode, f};
  }

  static KeySignature from_fifths(int fifths, Mode mode = Mode::major) {
    if (fifths < -7 || fifths > 7) throw Error("fifths out of range");
    return KeySignature{tonic_of_fifths(mode == Mode::minor ? fifths + 3 : fifths), mode, fifths};
  }

  KeySignature relative() const {
    return from_fifths(fifths, mode == Mode::major ? Mode::minor : Mode::major);
  }

  /// Alteration the signature applies to a letter (+1, -1 or 0).
  int alter_for(Step step) const {
    static constexpr std::array<Step, 7> kSharpOrder{Step::F, Step::C, Step::G, Step::D,
                                                     Step::A, Step::E, Step::B};
    int count = fifths < 0 ? -fifths : fifths;
    for (int i = 0; i < count; ++i) {
      Step s = fifths > 0 ? kSharpOrder[static_cast<std::size_t>(i)]
                          : kSharpOrder[static_cast<std::size_t>(6 - i)];
      if (s == step) return fifths > 0 ? 1 : -1;
    }
    return 0;
  }

  std::string to_string() const { return tonic.to_string() + (mode == Mode::minor ? "m" : ""); }

  friend bool operator==(const KeySignature&, const KeySignature&) = default;
};

inline std::set<int> diatonic_pitch_classes(const KeySignature& key) {
  static constexpr std::array<int, 7> kMajor{0, 2, 4, 5, 7, 9, 11};
  static constexpr std::array<int, 7> kNaturalMinor{0, 2, 3, 5, 7, 8, 10};
  const auto& steps = key.mode == Mode::major ? kMajor : kNaturalMinor;
  std::set<int> out;
  for (int s : steps) out.insert(pitch_class(key.tonic.pitch_class() + s));
  return out;
}

inline KeyDirection key_direction(const KeySignature& key) {
  if (key.fifths > 0) return KeyDirection::sharp;
  if (key.fifths < 0) return KeyDirection::flat;
  return KeyDirection::neutral;
}

// ---------------------------------------------------------------------------
// Containers

struct Measure {
  int index = 0;
  TimeSignature time_signature;
  KeySignature key_signature;
  std::optional<Rational> tempo_qpm;  // prevailing tempo, if any has been declared
  std::vector<NoteEvent> notes;        // sorted by onset
  std::vector<RestEvent> rests;

  bool rests_only() const { return notes.empty(); }

  /// Latest offset of any note or rest: the measure's filled duration.
  Rational content_duration() const {
    Rational end{0};
    for (const auto& n : notes) end = std::max(end, n.offset());
    for (const auto& r : rests) end = std::max(end, r.offset());
    return end;
  }
};

struct Part {
  std::string part_id;
  std::string declared_name;
  std::optional<int> midi_program;
  bool declared = true;
  std::vector<Measure> measures;

  std::size_t pitch_count() const {
    std::size_t n = 0;
    for (const auto& m : measures)
      for (const auto& e : m.notes) n += e.heads.size();
    return n;
  }
  bool has_notes() const {
    return std::any_of(measures.begin(), measures.end(),
                       [](const Measure& m) { return !m.notes.empty(); });
  }
};

struct Score {
  std::optional<std::string> title;
  std::optional<std::string> genre;
  std::vector<Part> parts;
  int measure_count = 0;
};

/// Absolute start of each measure in quarter notes, from nominal capacities.
inline std::vector<Rational> measure_starts(const Part& part) {
  std::vector<Rational> starts;
  starts.reserve(part.measures.size());
  Rational t{0};
  for (const auto& m : part.measures) {
    starts.push_back(t);
    t += m.time_signature.capacity();
  }
  return starts;
}

inline std::set<int> pitch_class_set(const Measure& measure) {
  std::set<int> out;
  for (const auto& e : measure.notes)
    for (const auto& h : e.heads) out.insert(pitch_class(h.midi()));
  return out;
}

/// Stable sort of a measure's events by onset (then layer).
inline void sort_events(Measure& m) {
  std::stable_sort(m.notes.begin(), m.notes.end(), [](const NoteEvent& a, const NoteEvent& b) {
    return a.onset < b.onset || (a.onset == b.onset && a.layer < b.layer);
  });
  std::stable_sort(m.rests.begin(), m.rests.end(), [](const RestEvent& a, const RestEvent& b) {
    return a.onset < b.onset || (a.onset == b.onset && a.layer < b.layer);
  });
}

}  // namespace scorelint
