#pragma once

// Canonical interleaved ABC writer: one line per measure, "[V:id]...|" for each part.

#include "scorelint/abc_parser.hpp"

#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace scorelint::abc {

/// A duration or tempo that the writer cannot express.
class UnrepresentableError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline constexpr std::int64_t kWriterUnitDen = 8;  // L:1/8
inline const Rational kWriterUnit{1, 2};           // in quarters

inline std::string length_suffix(const Rational& quarters) {
  Rational r = quarters / kWriterUnit;
  if (r <= 0) throw UnrepresentableError("non-positive duration");
  if (!is_power_of_two(r.denominator()))
    throw UnrepresentableError("duration " + scorelint::to_string(quarters) + " needs a tuplet");
  if (r == 1) return {};
  if (r.denominator() == 1) return std::to_string(r.numerator());
  if (r.numerator() == 1) return "/" + std::to_string(r.denominator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

inline std::string tempo_value(const Rational& qpm) {
  static const std::vector<std::pair<Rational, std::string>> kBeats{
      {Rational(1), "1/4"},  {Rational(1, 2), "1/8"}, {Rational(1, 4), "1/16"},
      {Rational(2), "1/2"},  {Rational(3, 2), "3/8"}, {Rational(3), "3/4"},
      {Rational(3, 4), "3/16"}};
  for (const auto& [beat, text] : kBeats) {
    Rational bpm = qpm / beat;
    if (is_integer(bpm)) return text + "=" + std::to_string(bpm.numerator());
  }
  // terminating decimal on a quarter beat
  std::int64_t den = qpm.denominator();
  int twos = 0, fives = 0;
  while (den % 2 == 0) {
    den /= 2;
    ++twos;
  }
  while (den % 5 == 0) {
    den /= 5;
    ++fives;
  }
  if (den != 1) throw UnrepresentableError("tempo " + scorelint::to_string(qpm) + " not expressible");
  return "1/4=" + format_fixed(qpm, std::max(twos, fives));
}

inline std::string accidental_text(int alter) {
  switch (alter) {
    case 2: return "^^";
    case 1: return "^";
    case 0: return "=";
    case -1: return "_";
    case -2: return "__";
    default: throw UnrepresentableError("alteration beyond a double accidental");
  }
}

inline std::string pitch_text(const SpelledPitch& p) {
  char letter = letter_of(p.step);
  if (p.octave >= 5) return std::string(1, static_cast<char>(std::tolower(letter))) + std::string(static_cast<std::size_t>(p.octave - 5), '\'');
  return std::string(1, letter) + std::string(static_cast<std::size_t>(4 - p.octave), ',');
}

class MeasureWriter {
 public:
  MeasureWriter(const Measure& m) : m_(m) {}

  std::string write() {
    int max_layer = 0;
    for (const auto& n : m_.notes) max_layer = std::max(max_layer, n.layer);
    for (const auto& r : m_.rests) max_layer = std::max(max_layer, r.layer);
    std::string out;
    for (int layer = 0; layer <= max_layer; ++layer) {
      if (layer > 0) out += " & ";
      out += write_layer(layer);
    }
    return out;
  }

 private:
  using Item = std::variant<const NoteEvent*, const RestEvent*>;

  static Rational onset_of(const Item& it) {
    return std::visit([](auto* e) { return e->onset; }, it);
  }
  static const std::optional<TupletInfo>& tuplet_of(const Item& it) {
    return std::visit([](auto* e) -> const std::optional<TupletInfo>& { return e->tuplet; }, it);
  }

  std::string write_layer(int layer) {
    std::vector<Item> items;
    for (const auto& n : m_.notes)
      if (n.layer == layer) items.emplace_back(&n);
    for (const auto& r : m_.rests)
      if (r.layer == layer) items.emplace_back(&r);
    std::stable_sort(items.begin(), items.end(),
                     [](const Item& a, const Item& b) { return onset_of(a) < onset_of(b); });

    std::string out;
    Rational cursor{0};
    std::optional<TupletInfo> open;
    int open_left = 0;
    for (std::size_t k = 0; k < items.size(); ++k) {
      const Item& it = items[k];
      Rational onset = onset_of(it);
      if (onset < cursor) throw UnrepresentableError("overlapping events within one layer");
      if (onset > cursor) {
        if (open_left > 0) throw UnrepresentableError("gap inside a tuplet");
        out += "x" + length_suffix(onset - cursor) + " ";
        cursor = onset;
      }
      const auto& tup = tuplet_of(it);
      Rational scale{1};
      if (tup) {
        if (tup->p < 2 || tup->p > 9 || tup->q < 1) throw UnrepresentableError("unsupported tuplet");
        if (open_left == 0 || !(open == tup)) {
          if (open_left > 0) throw UnrepresentableError("interrupted tuplet");
          int r = 0;
          for (std::size_t j = k; j < items.size() && tuplet_of(items[j]) == tup; ++j) ++r;
          out += "(" + std::to_string(tup->p) + ":" + std::to_string(tup->q) + ":" + std::to_string(r);
          open = tup;
          open_left = r;
        }
        scale = Rational(tup->p, tup->q);
        --open_left;
      } else if (open_left > 0) {
        throw UnrepresentableError("interrupted tuplet");
      }
      if (const auto* const* np = std::get_if<const NoteEvent*>(&it)) {
        const NoteEvent& n = **np;
        cursor = n.offset();
        out += write_note(n, scale);
      } else {
        const RestEvent& r = *std::get<const RestEvent*>(it);
        cursor = r.offset();
        out += (r.invisible ? "x" : "z") + length_suffix(r.duration * scale);
      }
      out += ' ';
    }
    if (open_left > 0) throw UnrepresentableError("unterminated tuplet");
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
  }

  std::string write_head(const NoteHead& h) {
    const auto& p = h.pitch;
    auto key = std::make_pair(static_cast<int>(p.step), p.octave);
    auto it = state_.find(key);
    int implied = it != state_.end() ? it->second : m_.key_signature.alter_for(p.step);
    std::string out;
    if (h.explicit_accidental || p.alter != implied) {
      out += accidental_text(p.alter);
      state_[key] = p.alter;
    }
    return out + pitch_text(p);
  }

  std::string write_note(const NoteEvent& n, Rational scale) {
    if (n.heads.empty()) throw UnrepresentableError("note event without pitches");
    std::string out;
    if (n.dynamic) out += "!" + *n.dynamic + "!";
    if (n.heads.size() == 1) {
      out += write_head(n.heads.front());
    } else {
      out += "[";
      for (const auto& h : n.heads) out += write_head(h);
      out += "]";
    }
    out += length_suffix(n.duration * scale);
    if (n.tie_forward) out += "-";
    return out;
  }

  const Measure& m_;
  std::map<std::pair<int, int>, int> state_;
};

inline void check_voice_id(const std::string& id) {
  if (id.empty() || id.find_first_of(" \t]%\"") != std::string::npos)
    throw UnrepresentableError("voice id '" + id + "' cannot be written");
}

}  // namespace detail

/// Serializes a score as canonical interleaved ABC (L:1/8, quarter-note Q:).
inline std::string serialize_abc(const Score& score) {
  if (score.parts.empty()) throw UnrepresentableError("score has no parts");
  std::ostringstream out;
  out << "X:1\n";
  if (score.title) out << "T:" << *score.title << "\n";
  if (score.genre) out << "G:" << *score.genre << "\n";

  const Part& first = score.parts.front();
  TimeSignature header_meter = first.measures.empty() ? TimeSignature{} : first.measures.front().time_signature;
  KeySignature header_key = first.measures.empty() ? KeySignature{} : first.measures.front().key_signature;
  std::optional<Rational> header_tempo = first.measures.empty() ? std::nullopt : first.measures.front().tempo_qpm;

  out << "L:1/" << detail::kWriterUnitDen << "\n";
  out << "M:" << header_meter.to_string() << "\n";
  if (header_tempo) out << "Q:" << detail::tempo_value(*header_tempo) << "\n";
  out << "%%score";
  for (const auto& p : score.parts) {
    detail::check_voice_id(p.part_id);
    out << " " << p.part_id;
  }
  out << "\n";
  for (const auto& p : score.parts) {
    out << "V:" << p.part_id;
    if (!p.declared_name.empty()) out << " name=\"" << p.declared_name << "\"";
    out << "\n";
    if (p.midi_program) out << "%%MIDI program " << *p.midi_program << "\n";
  }
  out << "K:" << header_key.to_string() << "\n";

  struct VoiceRun {
    TimeSignature meter;
    KeySignature key;
  };
  std::vector<VoiceRun> runs(score.parts.size(), VoiceRun{header_meter, header_key});
  std::optional<Rational> tempo = header_tempo;

  std::size_t max_measures = 0;
  for (const auto& p : score.parts) max_measures = std::max(max_measures, p.measures.size());
  for (std::size_t i = 0; i < max_measures; ++i) {
    for (std::size_t k = 0; k < score.parts.size(); ++k) {
      const Part& p = score.parts[k];
      if (i >= p.measures.size()) continue;
      const Measure& m = p.measures[i];
      out << "[V:" << p.part_id << "]";
      if (k == 0 && m.tempo_qpm && m.tempo_qpm != tempo) {
        out << "[Q:" << detail::tempo_value(*m.tempo_qpm) << "]";
        tempo = m.tempo_qpm;
      }
      if (!(m.time_signature == runs[k].meter)) {
        out << "[M:" << m.time_signature.to_string() << "]";
        runs[k].meter = m.time_signature;
      }
      if (!(m.key_signature == runs[k].key)) {
        out << "[K:" << m.key_signature.to_string() << "]";
        runs[k].key = m.key_signature;
      }
      out << detail::MeasureWriter(m).write() << "|";
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace scorelint::abc
