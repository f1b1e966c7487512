#pragma once

// Interleaved ABC reader. Supported subset:
//   header fields X T C G L M Q K V, %%score, %%MIDI program
//   notes with ^ ^^ _ __ = accidentals, octave marks, lengths (n, /n, n/m, //)
//   measure-scoped accidentals, ties (-), chords [...], rests z x Z(n), broken rhythm > <
//   tuplets (p, (p:q, (p:q:r for p = 2..9, inline [K:] [M:] [L:] [Q:] [V:], overlay &,
//   decorations !..! / +..+ (dynamics kept), chord symbols and grace notes {..} skipped.

#include "scorelint/score.hpp"

#include <cctype>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace scorelint::abc {

struct SourcePos {
  int line = 0;    // 1-based
  int column = 0;  // 1-based
};

class ParseError : public Error {
 public:
  ParseError(std::string code, const std::string& message, SourcePos pos)
      : Error(std::to_string(pos.line) + ":" + std::to_string(pos.column) + ": " + message),
        code_(std::move(code)),
        pos_(pos) {}
  const std::string& code() const { return code_; }
  SourcePos pos() const { return pos_; }

 private:
  std::string code_;
  SourcePos pos_;
};

/// Illegal token.
class LexError : public ParseError {
 public:
  LexError(const std::string& m, SourcePos p) : ParseError("LEX_ERROR", m, p) {}
};

/// Missing K:, undeclared voice, malformed field.
class StructureError : public ParseError {
 public:
  StructureError(const std::string& m, SourcePos p) : ParseError("STRUCTURE_ERROR", m, p) {}
};

/// Pitch outside MIDI 0..127.
class RangeError : public ParseError {
 public:
  RangeError(const std::string& m, SourcePos p) : ParseError("RANGE_ERROR", m, p) {}
};

struct ParseWarning {
  std::string code;
  std::string message;
  SourcePos pos;
};

struct ParseOptions {
  /// Keep voices referenced in the body but never declared, as parts with declared = false,
  /// instead of throwing StructureError. The validator then reports them.
  bool allow_undeclared_voices = false;
};

struct HeaderField {
  char key = 0;  // 'X', 'T', ..., or '%' for %% directives
  std::string value;
  SourcePos pos;
};

struct BodyLine {
  std::string text;
  int line = 0;
};

/// Raw split of an ABC tune into header fields and body lines.
struct AbcDocument {
  std::vector<HeaderField> header_fields;
  std::vector<BodyLine> body_lines;
};

inline bool is_dynamic_mark(std::string_view name) {
  static const std::set<std::string, std::less<>> kDynamics{
      "pppp", "ppp", "pp", "p", "mp", "mf", "f", "ff", "fff", "ffff", "sfz", "sf", "sff", "fp", "rfz"};
  return kDynamics.count(name) > 0;
}

namespace detail {

inline std::string strip_comment(std::string_view line) {
  bool in_quote = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_quote = !in_quote;
    if (line[i] == '%' && !in_quote && (i == 0 || line[i - 1] != '\\')) return std::string(line.substr(0, i));
  }
  return std::string(line);
}

inline bool is_field_line(std::string_view line) {
  return line.size() >= 2 && std::isalpha(static_cast<unsigned char>(line[0])) && line[1] == ':';
}

inline std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i >= s.size()) break;
    std::size_t b = i;
    if (s[i] == '"') {
      ++i;
      while (i < s.size() && s[i] != '"') ++i;
      if (i < s.size()) ++i;
    } else {
      while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) {
        if (s[i] == '"') {
          ++i;
          while (i < s.size() && s[i] != '"') ++i;
        }
        if (i < s.size()) ++i;
      }
    }
    out.emplace_back(s.substr(b, i - b));
  }
  return out;
}

inline std::string trim_copy(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::string unquote(std::string s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

}  // namespace detail

/// Splits text into header and body. The header ends at the first K: field.
inline AbcDocument read_document(std::string_view text) {
  AbcDocument doc;
  if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF &&
      static_cast<unsigned char>(text[1]) == 0xBB && static_cast<unsigned char>(text[2]) == 0xBF)
    text.remove_prefix(3);

  bool in_body = false;
  bool saw_field = false;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);

    std::string trimmed(raw);
    while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.back()))) trimmed.pop_back();

    if (!in_body) {
      if (trimmed.empty()) {
        if (saw_field) break;  // a blank line inside the header ends the tune
        continue;
      }
      if (trimmed.rfind("%%", 0) == 0) {
        doc.header_fields.push_back({'%', trimmed.substr(2), {line_no, 1}});
        continue;
      }
      if (trimmed[0] == '%') continue;
      std::string line = detail::strip_comment(trimmed);
      if (detail::is_field_line(line)) {
        saw_field = true;
        std::string value = line.substr(2);
        while (!value.empty() && std::isspace(static_cast<unsigned char>(value.front()))) value.erase(value.begin());
        while (!value.empty() && std::isspace(static_cast<unsigned char>(value.back()))) value.pop_back();
        doc.header_fields.push_back({line[0], value, {line_no, 1}});
        if (line[0] == 'K') in_body = true;
        continue;
      }
      if (line.rfind("+:", 0) == 0) continue;
      throw StructureError("music before K: field (missing K:)", {line_no, 1});
    }
    if (trimmed.empty()) break;  // end of tune
    doc.body_lines.push_back({std::string(raw), line_no});
  }
  if (!in_body) throw StructureError("missing K: field", {line_no, 1});
  return doc;
}

// ---------------------------------------------------------------------------
// Field value parsers (shared with the writer and plan reader)

inline TimeSignature parse_meter(std::string_view value, SourcePos pos = {}) {
  std::string v = detail::strip_comment(value);
  std::string s;
  for (char c : v)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  if (s == "C") return {4, 4};
  if (s == "C|") return {2, 2};
  if (s.empty() || s == "none") return {4, 4};
  auto slash = s.find('/');
  if (slash == std::string::npos) throw StructureError("bad meter '" + s + "'", pos);
  int num = 0;
  std::string top = s.substr(0, slash);
  std::size_t i = 0;
  try {
    while (i < top.size()) {
      std::size_t next = top.find('+', i);
      std::string term = top.substr(i, next == std::string::npos ? std::string::npos : next - i);
      if (term.empty() || term.find_first_not_of("0123456789") != std::string::npos)
        throw StructureError("bad meter '" + s + "'", pos);
      num += std::stoi(term);
      if (next == std::string::npos) break;
      i = next + 1;
    }
    std::string bottom = s.substr(slash + 1);
    if (bottom.empty() || bottom.find_first_not_of("0123456789") != std::string::npos)
      throw StructureError("bad meter '" + s + "'", pos);
    int den = std::stoi(bottom);
    if (num <= 0 || !is_power_of_two(den)) throw StructureError("bad meter '" + s + "'", pos);
    return {num, den};
  } catch (const std::out_of_range&) {
    throw StructureError("bad meter '" + s + "'", pos);
  }
}

/// Parses a K: value. Church modes map to the major key with the same signature.
inline KeySignature parse_key(std::string_view value, SourcePos pos = {}) {
  std::string v = detail::strip_comment(value);
  auto words = detail::split_words(v);
  if (words.empty()) return KeySignature{};
  std::string first = words[0];
  std::string lower_first = first;
  for (char& c : lower_first) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower_first == "none" || lower_first == "hp" || first.find('=') != std::string::npos) return KeySignature{};

  auto step = step_from_letter(first[0]);
  if (!step || !std::isupper(static_cast<unsigned char>(first[0])))
    throw StructureError("bad key '" + v + "'", pos);
  Tonic tonic{*step, 0};
  std::size_t i = 1;
  if (i < first.size() && first[i] == '#') {
    tonic.alter = 1;
    ++i;
  } else if (i < first.size() && first[i] == 'b') {
    tonic.alter = -1;
    ++i;
  }
  std::string mode_word = first.substr(i);
  if (mode_word.empty() && words.size() > 1 && words[1].find('=') == std::string::npos) mode_word = words[1];
  for (char& c : mode_word) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  std::string m3 = mode_word.substr(0, 3);

  int offset = 0;
  Mode mode = Mode::major;
  if (mode_word.empty() || m3 == "maj" || m3 == "ion") {
  } else if (mode_word == "m" || m3 == "min" || m3 == "aeo") {
    mode = Mode::minor;
  } else if (m3 == "mix") {
    offset = -1;
  } else if (m3 == "dor") {
    offset = -2;
  } else if (m3 == "phr") {
    offset = -4;
  } else if (m3 == "lyd") {
    offset = 1;
  } else if (m3 == "loc") {
    offset = -5;
  } else if (mode_word.find('=') != std::string::npos || mode_word[0] == '^' || mode_word[0] == '_') {
  } else {
    throw StructureError("unknown mode '" + mode_word + "'", pos);
  }
  int fifths = fifths_of_tonic(tonic) + offset - (mode == Mode::minor ? 3 : 0);
  if (fifths < -7 || fifths > 7) throw StructureError("key '" + v + "' needs more than 7 accidentals", pos);
  if (mode == Mode::minor) return KeySignature{tonic, Mode::minor, fifths};
  return KeySignature::from_fifths(fifths, Mode::major);
}

/// Parses an L: value into quarter notes ("1/8" -> 1/2).
inline Rational parse_unit_length(std::string_view value, SourcePos pos = {}) {
  std::string v = detail::strip_comment(value);
  std::string s;
  for (char c : v)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  try {
    Rational r = parse_rational(s);
    if (r <= 0) throw StructureError("bad unit length '" + s + "'", pos);
    return r * 4;
  } catch (const std::invalid_argument&) {
    throw StructureError("bad unit length '" + s + "'", pos);
  } catch (const std::out_of_range&) {
    throw StructureError("bad unit length '" + s + "'", pos);
  }
}

/// Parses a Q: value to quarter notes per minute. Returns nullopt for text-only tempos.
inline std::optional<Rational> parse_tempo(std::string_view value, Rational unit_quarters, SourcePos pos = {}) {
  std::string v = detail::strip_comment(value);
  std::string s;
  bool in_quote = false;
  for (char c : v) {
    if (c == '"') {
      in_quote = !in_quote;
      continue;
    }
    if (!in_quote) s += c;
  }
  auto bad = [&]() { return StructureError("bad tempo '" + v + "'", pos); };
  try {
    auto eq = s.find('=');
    if (eq == std::string::npos) {
      std::string t = detail::trim_copy(s);
      if (t.empty()) return std::nullopt;
      if (t.find_first_not_of("0123456789.") != std::string::npos) throw bad();
      return parse_rational(t) * unit_quarters;
    }
    std::string rhs = detail::trim_copy(s.substr(eq + 1));
    if (rhs.empty() || rhs.find_first_not_of("0123456789.") != std::string::npos) throw bad();
    Rational bpm = parse_rational(rhs);
    Rational beat{0};
    for (const auto& w : detail::split_words(s.substr(0, eq))) {
      if (w[0] == 'C') {
        std::string mult = w.substr(1);
        beat += unit_quarters * (mult.empty() ? Rational(1) : parse_rational(mult));
      } else {
        beat += parse_rational(w) * 4;
      }
    }
    if (beat <= 0 || bpm <= 0) throw bad();
    return bpm * beat;
  } catch (const std::invalid_argument&) {
    throw bad();
  } catch (const std::out_of_range&) {
    throw bad();
  }
}

/// Parses "V:id attr=..." into (id, name).
inline std::pair<std::string, std::string> parse_voice_field(std::string_view value, bool* has_attributes = nullptr) {
  auto words = detail::split_words(detail::strip_comment(value));
  if (words.empty()) return {};
  std::string id = words[0];
  std::string name;
  bool attrs = false;
  for (std::size_t i = 1; i < words.size(); ++i) {
    const auto& w = words[i];
    auto eq = w.find('=');
    if (eq == std::string::npos) continue;
    attrs = true;
    std::string k = w.substr(0, eq);
    for (char& c : k) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (k == "name" || k == "nm") name = detail::unquote(w.substr(eq + 1));
  }
  if (has_attributes) *has_attributes = attrs;
  return {id, name};
}

// ---------------------------------------------------------------------------

namespace detail {

struct Tuplet {
  int p = 0;
  int q = 0;
  int remaining = 0;
  int layer = 0;
  Rational group_onset{0};
};

struct EventRef {
  bool is_note = false;
  std::size_t index = 0;
};

struct VoiceState {
  std::string id;
  std::size_t part_index = 0;
  TimeSignature meter;
  KeySignature key;
  Rational unit{1, 2};
  Measure current;
  int layer = 0;
  Rational cursor{0};
  std::map<std::pair<int, int>, int> accidentals;  // (step, octave) -> alter within the measure
  std::map<int, std::vector<int>> pending_tie;     // layer -> midi numbers
  std::optional<Tuplet> tuplet;
  std::optional<std::string> pending_dynamic;
  std::optional<EventRef> last_event;
  Rational next_factor{1};  // from broken rhythm
  bool last_was_note = false;
};

class BodyParser {
 public:
  BodyParser(const AbcDocument& doc, const ParseOptions& options, std::vector<ParseWarning>* warnings)
      : doc_(doc), options_(options), warnings_(warnings) {}

  Score run() {
    read_header();
    for (const auto& line : doc_.body_lines) parse_line(line);
    for (auto& v : voices_) close_measure(*v, true);
    return assemble();
  }

 private:
  // -- header ---------------------------------------------------------------

  void read_header() {
    bool have_unit = false;
    std::optional<std::string> pending_tempo;
    SourcePos tempo_pos;
    std::string last_voice;
    for (const auto& f : doc_.header_fields) {
      switch (f.key) {
        case 'T':
          if (!title_) title_ = f.value;
          break;
        case 'G':
          if (!genre_) genre_ = f.value;
          break;
        case 'M':
          meter_ = parse_meter(f.value, f.pos);
          break;
        case 'L':
          unit_ = parse_unit_length(f.value, f.pos);
          have_unit = true;
          break;
        case 'Q':
          pending_tempo = f.value;
          tempo_pos = f.pos;
          break;
        case 'K':
          key_ = parse_key(f.value, f.pos);
          break;
        case 'V': {
          auto [id, name] = parse_voice_field(f.value);
          if (id.empty()) throw StructureError("empty V: field", f.pos);
          auto& decl = declare(id);
          if (!name.empty()) decl.name = name;
          last_voice = id;
          break;
        }
        case '%':
          header_directive(f, last_voice);
          break;
        default:
          break;
      }
    }
    if (!have_unit) unit_ = meter_.capacity() / 4 < Rational(3, 4) ? Rational(1, 4) : Rational(1, 2);
    if (pending_tempo) {
      if (auto q = parse_tempo(*pending_tempo, unit_, tempo_pos)) tempo_events_.push_back({0, *q});
      else warn("TEMPO_TEXT_ONLY", "tempo without a beat value ignored", tempo_pos);
    }
  }

  struct Declaration {
    std::string id;
    std::string name;
    std::optional<int> program;
  };

  Declaration& declare(const std::string& id) {
    for (auto& d : declarations_)
      if (d.id == id) return d;
    declarations_.push_back({id, {}, {}});
    return declarations_.back();
  }

  void header_directive(const HeaderField& f, const std::string& last_voice) {
    auto words = split_words(f.value);
    if (words.empty()) return;
    if (words[0] == "MIDI" && words.size() >= 3 && words[1] == "program") {
      int program = parse_program(words, f.pos);
      if (last_voice.empty())
        default_program_ = program;
      else
        declare(last_voice).program = program;
    } else if (words[0] == "score" || words[0] == "staves") {
      for (std::size_t i = 1; i < words.size(); ++i) {
        std::string id;
        for (char c : words[i])
          if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') id += c;
        if (!id.empty()) declare(id);
      }
    }
  }

  int parse_program(const std::vector<std::string>& words, SourcePos pos) {
    try {
      int program = std::stoi(words.back());
      if (program < 0 || program > 127) throw StructureError("MIDI program out of range", pos);
      return program;
    } catch (const std::logic_error&) {
      throw StructureError("bad %%MIDI program", pos);
    }
  }

  // -- voices ---------------------------------------------------------------

  VoiceState& voice(const std::string& id, bool declares, SourcePos pos) {
    for (auto& v : voices_)
      if (v->id == id) return *v;
    bool declared = declares;
    for (const auto& d : declarations_)
      if (d.id == id) declared = true;
    if (!declared) {
      if (!options_.allow_undeclared_voices) throw StructureError("voice '" + id + "' is not declared", pos);
      undeclared_.insert(id);
    }
    return create_voice(id);
  }

  VoiceState& create_voice(const std::string& id) {
    auto v = std::make_unique<VoiceState>();
    v->id = id;
    v->meter = meter_;
    v->key = key_;
    v->unit = unit_;
    v->part_index = voices_.size();
    start_measure(*v);
    voices_.push_back(std::move(v));
    measures_.emplace_back();
    return *voices_.back();
  }

  VoiceState& current_voice(SourcePos pos) {
    if (!current_) {
      if (!declarations_.empty())
        current_ = &voice(declarations_.front().id, true, pos);
      else
        current_ = &voice("1", true, pos);
    }
    return *current_;
  }

  // -- measures -------------------------------------------------------------

  void start_measure(VoiceState& v) {
    v.current = Measure{};
    v.current.index = static_cast<int>(measure_count(v));
    v.current.time_signature = v.meter;
    v.current.key_signature = v.key;
    v.layer = 0;
    v.cursor = 0;
    v.accidentals.clear();
    v.tuplet.reset();
    v.last_event.reset();
    v.next_factor = 1;
    v.last_was_note = false;
  }

  std::size_t measure_count(const VoiceState& v) const {
    return v.part_index < measures_.size() ? measures_[v.part_index].size() : 0;
  }

  static bool measure_empty(const Measure& m) { return m.notes.empty() && m.rests.empty(); }

  void close_measure(VoiceState& v, bool at_end = false) {
    if (!measure_empty(v.current)) {
      sort_events(v.current);
      measures_[v.part_index].push_back(std::move(v.current));
    }
    // ties only carry across the barline on the main layer
    for (auto it = v.pending_tie.begin(); it != v.pending_tie.end();)
      it = it->first != 0 ? v.pending_tie.erase(it) : std::next(it);
    if (!at_end) start_measure(v);
  }

  void set_meter(VoiceState& v, const TimeSignature& ts) {
    v.meter = ts;
    if (measure_empty(v.current)) v.current.time_signature = ts;
  }

  void set_key(VoiceState& v, const KeySignature& k) {
    v.key = k;
    if (measure_empty(v.current)) v.current.key_signature = k;
  }

  // -- body -----------------------------------------------------------------

  void parse_line(const BodyLine& bl) {
    std::string_view raw = bl.text;
    if (raw.rfind("%%", 0) == 0) {
      body_directive(std::string(raw.substr(2)), {bl.line, 1});
      return;
    }
    std::string line = strip_comment(raw);
    if (is_field_line(line)) {
      body_field(line[0], line.substr(2), {bl.line, 1}, false);
      return;
    }
    line_ = &line;
    line_no_ = bl.line;
    i_ = 0;
    while (i_ < line.size()) step();
    line_ = nullptr;
  }

  void body_directive(const std::string& text, SourcePos pos) {
    auto words = split_words(text);
    if (words.size() >= 3 && words[0] == "MIDI" && words[1] == "program") {
      int program = parse_program(words, pos);
      auto& v = current_voice(pos);
      program_override_[v.id] = program;
    }
  }

  void body_field(char key, std::string value, SourcePos pos, bool inline_field) {
    while (!value.empty() && std::isspace(static_cast<unsigned char>(value.front()))) value.erase(value.begin());
    switch (key) {
      case 'V': {
        bool attrs = false;
        auto [id, name] = parse_voice_field(value, &attrs);
        if (id.empty()) throw StructureError("empty V: field", pos);
        bool declares = !inline_field && attrs;
        if (declares) {
          auto& d = declare(id);
          if (!name.empty()) d.name = name;
        }
        current_ = &voice(id, declares, pos);
        break;
      }
      case 'K': {
        auto words = split_words(strip_comment(value));
        if (words.empty() || words[0].find('=') != std::string::npos) break;  // clef-only change
        set_key(current_voice(pos), parse_key(value, pos));
        break;
      }
      case 'M':
        set_meter(current_voice(pos), parse_meter(value, pos));
        break;
      case 'L':
        current_voice(pos).unit = parse_unit_length(value, pos);
        break;
      case 'Q': {
        auto& v = current_voice(pos);
        if (auto q = parse_tempo(value, v.unit, pos))
          tempo_events_.push_back({static_cast<int>(measure_count(v)), *q});
        break;
      }
      case 'w':
      case 'W':
        warn("LYRICS_DROPPED", "lyrics are not interpreted", pos);
        break;
      default:
        break;
    }
  }

  SourcePos here() const { return {line_no_, static_cast<int>(i_) + 1}; }
  char peek(std::size_t ahead = 0) const { return i_ + ahead < line_->size() ? (*line_)[i_ + ahead] : '\0'; }

  [[noreturn]] void lex_error(const std::string& what) const { throw LexError(what, here()); }

  void step() {
    char c = peek();
    if (c == ' ' || c == '\t' || c == '\\' || c == '`' || c == 'y') {
      ++i_;
      return;
    }
    if (c == '"') {
      skip_quoted();
      return;
    }
    if (c == '!' || c == '+') {
      decoration(c);
      return;
    }
    if (c == '{') {
      grace();
      return;
    }
    if (c == '[') {
      bracket();
      return;
    }
    if (c == '|' || c == ':') {
      barline();
      return;
    }
    if (c == '(') {
      paren();
      return;
    }
    if (c == ')') {
      ++i_;
      return;
    }
    if (c == '-') {
      tie();
      return;
    }
    if (c == '>' || c == '<') {
      broken_rhythm();
      return;
    }
    if (c == '&') {
      overlay();
      return;
    }
    if (c == '.' || c == '~' || c == 'H' || c == 'L' || c == 'M' || c == 'O' || c == 'P' || c == 'S' ||
        c == 'T' || c == 'u' || c == 'v' || c == 'J' || c == 'R') {
      ++i_;
      return;
    }
    if (c == 'z' || c == 'x') {
      rest();
      return;
    }
    if (c == 'Z' || c == 'X') {
      multi_rest();
      return;
    }
    if (c == '^' || c == '_' || c == '=' || step_from_letter(c)) {
      note_or_chord(false);
      return;
    }
    lex_error(std::string("unexpected character '") + c + "'");
  }

  void skip_quoted() {
    auto close = line_->find('"', i_ + 1);
    if (close == std::string::npos) lex_error("unterminated annotation");
    i_ = close + 1;
  }

  void decoration(char delim) {
    auto close = line_->find(delim, i_ + 1);
    if (close == std::string::npos) lex_error(std::string("unterminated decoration ") + delim);
    std::string name = line_->substr(i_ + 1, close - i_ - 1);
    if (is_dynamic_mark(name)) current_voice(here()).pending_dynamic = name;
    i_ = close + 1;
  }

  void grace() {
    auto close = line_->find('}', i_ + 1);
    if (close == std::string::npos) lex_error("unterminated grace group");
    warn("GRACE_DROPPED", "grace notes are not counted as events", here());
    i_ = close + 1;
  }

  void bracket() {
    char n = peek(1);
    if (n == '|') {
      barline();
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(n))) {  // repeat ending [1
      i_ += 1;
      while (std::isdigit(static_cast<unsigned char>(peek())) || peek() == ',' || peek() == '-') ++i_;
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(n)) && peek(2) == ':') {
      auto close = line_->find(']', i_);
      if (close == std::string::npos) lex_error("unterminated inline field");
      SourcePos pos = here();
      std::string value = line_->substr(i_ + 3, close - i_ - 3);
      i_ = close + 1;
      body_field(n, value, pos, true);
      return;
    }
    note_or_chord(true);
  }

  void barline() {
    std::size_t start = i_;
    bool has_bar = false;
    while (peek() == '|' || peek() == ':' || peek() == ']' || (peek() == '[' && peek(1) == '|')) {
      if (peek() == '|') has_bar = true;
      ++i_;
    }
    std::string token = line_->substr(start, i_ - start);
    if (!has_bar && token != "::") {
      i_ = start;
      lex_error("stray ':'");
    }
    while (std::isdigit(static_cast<unsigned char>(peek())) ||
           (peek() == ',' && std::isdigit(static_cast<unsigned char>(peek(1)))))
      ++i_;
    auto& v = current_voice(here());
    close_measure(v);
  }

  void paren() {
    if (!std::isdigit(static_cast<unsigned char>(peek(1)))) {  // slur
      ++i_;
      return;
    }
    SourcePos pos = here();
    ++i_;
    int p = read_int();
    std::optional<int> q, r;
    if (peek() == ':') {
      ++i_;
      if (std::isdigit(static_cast<unsigned char>(peek()))) q = read_int();
      if (peek() == ':') {
        ++i_;
        if (std::isdigit(static_cast<unsigned char>(peek()))) r = read_int();
      }
    }
    if (p < 2 || p > 9) throw LexError("unsupported tuplet (" + std::to_string(p), pos);
    auto& v = current_voice(pos);
    if (!q) {
      bool compound = v.meter.numerator % 3 == 0 && v.meter.numerator > 3;
      switch (p) {
        case 2: q = 3; break;
        case 3: q = 2; break;
        case 4: q = 3; break;
        case 6: q = 2; break;
        case 8: q = 3; break;
        default: q = compound ? 3 : 2; break;
      }
    }
    if (*q < 1) throw LexError("bad tuplet ratio", pos);
    v.tuplet = Tuplet{p, *q, r.value_or(p), v.layer, v.cursor};
  }

  int read_int() {
    int n = 0;
    bool any = false;
    while (std::isdigit(static_cast<unsigned char>(peek()))) {
      n = n * 10 + (peek() - '0');
      if (n > 100000) lex_error("number too large");
      ++i_;
      any = true;
    }
    if (!any) lex_error("expected a number");
    return n;
  }

  Rational read_length() {
    std::int64_t num = 1, den = 1;
    if (std::isdigit(static_cast<unsigned char>(peek()))) num = read_int();
    while (peek() == '/') {
      ++i_;
      if (std::isdigit(static_cast<unsigned char>(peek())))
        den *= read_int();
      else
        den *= 2;
      if (den > 4096) lex_error("note length too short");
    }
    if (num == 0) lex_error("zero note length");
    return Rational(num, den);
  }

  void tie() {
    auto& v = current_voice(here());
    ++i_;
    if (!v.last_was_note || !v.last_event || !v.last_event->is_note) {
      warn("STRAY_TIE", "tie without a preceding note", here());
      return;
    }
    auto& e = v.current.notes[v.last_event->index];
    e.tie_forward = true;
    auto& pending = v.pending_tie[e.layer];
    pending.clear();
    for (const auto& h : e.heads) pending.push_back(h.midi());
  }

  void broken_rhythm() {
    char c = peek();
    int n = 0;
    while (peek() == c) {
      ++n;
      ++i_;
    }
    auto& v = current_voice(here());
    if (!v.last_event) lex_error("broken rhythm without a preceding note");
    Rational shortf(1, 1 << n);
    Rational longf = Rational(2) - shortf;
    Rational mine = c == '>' ? longf : shortf;
    v.next_factor = c == '>' ? shortf : longf;
    Rational old_duration = event_duration(v, *v.last_event);
    Rational new_duration = old_duration * mine;
    set_event_duration(v, *v.last_event, new_duration);
    v.cursor += new_duration - old_duration;
  }

  static Rational event_duration(VoiceState& v, const EventRef& ref) {
    return ref.is_note ? v.current.notes[ref.index].duration : v.current.rests[ref.index].duration;
  }
  static void set_event_duration(VoiceState& v, const EventRef& ref, Rational d) {
    if (ref.is_note)
      v.current.notes[ref.index].duration = d;
    else
      v.current.rests[ref.index].duration = d;
  }

  void overlay() {
    ++i_;
    auto& v = current_voice(here());
    ++v.layer;
    v.cursor = 0;
    v.tuplet.reset();
    v.last_event.reset();
    v.next_factor = 1;
    v.last_was_note = false;
  }

  /// Duration of the next event with tuplet and broken-rhythm scaling applied; advances tuplet state.
  Rational scaled_duration(VoiceState& v, Rational written, std::optional<TupletInfo>& tuplet_out) {
    Rational d = written * v.next_factor;
    v.next_factor = 1;
    if (v.tuplet && v.tuplet->layer == v.layer && v.tuplet->remaining > 0) {
      d *= Rational(v.tuplet->q, v.tuplet->p);
      tuplet_out = TupletInfo{v.tuplet->p, v.tuplet->q, v.tuplet->group_onset};
      if (--v.tuplet->remaining == 0) v.tuplet.reset();
    }
    return d;
  }

  void rest() {
    bool invisible = peek() == 'x';
    ++i_;
    Rational len = read_length();
    auto& v = current_voice(here());
    RestEvent r;
    r.onset = v.cursor;
    r.duration = scaled_duration(v, v.unit * len, r.tuplet);
    r.invisible = invisible;
    r.layer = v.layer;
    v.cursor += r.duration;
    v.current.rests.push_back(r);
    v.last_event = EventRef{false, v.current.rests.size() - 1};
    v.last_was_note = false;
  }

  void multi_rest() {
    ++i_;
    int count = 1;
    if (std::isdigit(static_cast<unsigned char>(peek()))) count = read_int();
    if (count < 1) lex_error("bad multi-measure rest");
    auto& v = current_voice(here());
    for (int k = 0; k < count; ++k) {
      if (k > 0) close_measure(v);
      RestEvent r;
      r.onset = v.cursor;
      r.duration = v.current.time_signature.capacity();
      r.layer = v.layer;
      v.cursor += r.duration;
      v.current.rests.push_back(r);
    }
    v.last_event.reset();
    v.last_was_note = false;
  }

  struct WrittenNote {
    NoteHead head;
    Rational length{1};
    bool tie = false;
  };

  WrittenNote read_note(VoiceState& v) {
    SourcePos pos = here();
    int acc = 0;
    bool has_acc = false;
    if (peek() == '^') {
      has_acc = true;
      acc = 1;
      ++i_;
      if (peek() == '^') {
        acc = 2;
        ++i_;
      }
    } else if (peek() == '_') {
      has_acc = true;
      acc = -1;
      ++i_;
      if (peek() == '_') {
        acc = -2;
        ++i_;
      }
    } else if (peek() == '=') {
      has_acc = true;
      ++i_;
    }
    if (has_acc && (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '/'))
      lex_error("microtonal accidentals are not supported");
    auto st = step_from_letter(peek());
    if (!st) lex_error("expected a note letter");
    char letter = peek();
    ++i_;
    int octave = std::isupper(static_cast<unsigned char>(letter)) ? 4 : 5;
    while (peek() == '\'' || peek() == ',') {
      octave += peek() == '\'' ? 1 : -1;
      ++i_;
    }
    WrittenNote w;
    w.length = read_length();
    auto key = std::make_pair(static_cast<int>(*st), octave);
    int alter;
    if (has_acc) {
      alter = acc;
      v.accidentals[key] = acc;
    } else if (auto it = v.accidentals.find(key); it != v.accidentals.end()) {
      alter = it->second;
    } else {
      alter = v.key.alter_for(*st);
    }
    w.head.pitch = SpelledPitch{*st, alter, octave};
    w.head.explicit_accidental = has_acc;
    int midi = w.head.midi();
    if (midi < 0 || midi > 127) throw RangeError("pitch outside MIDI range (" + std::to_string(midi) + ")", pos);
    if (peek() == '-') {
      w.tie = true;
      ++i_;
    }
    return w;
  }

  void note_or_chord(bool chord) {
    SourcePos pos = here();
    auto& v = current_voice(pos);
    NoteEvent e;
    Rational written;
    bool any_tie = false;
    if (chord) {
      ++i_;
      std::vector<WrittenNote> notes;
      while (peek() != ']') {
        char c = peek();
        if (c == '\0') throw LexError("unterminated chord", pos);
        if (c == ' ' || c == ')' || c == '(') {
          ++i_;
        } else if (c == '"') {
          skip_quoted();
        } else if (c == '!' || c == '+') {
          decoration(c);
        } else if (c == '.' || c == '~') {
          ++i_;
        } else {
          notes.push_back(read_note(v));
        }
      }
      ++i_;
      if (notes.empty()) throw LexError("empty chord", pos);
      Rational outer = read_length();
      written = notes.front().length * outer;
      for (const auto& n : notes) {
        e.heads.push_back(n.head);
        any_tie = any_tie || n.tie;
      }
    } else {
      auto n = read_note(v);
      written = n.length;
      e.heads.push_back(n.head);
      any_tie = n.tie;
    }
    e.onset = v.cursor;
    e.layer = v.layer;
    e.duration = scaled_duration(v, v.unit * written, e.tuplet);
    if (v.pending_dynamic) {
      e.dynamic = std::move(v.pending_dynamic);
      v.pending_dynamic.reset();
    }
    if (auto it = v.pending_tie.find(v.layer); it != v.pending_tie.end()) {
      bool shared = false;
      for (const auto& h : e.heads)
        for (int m : it->second) shared = shared || h.midi() == m;
      if (shared)
        e.tie_backward = true;
      else
        warn("DANGLING_TIE", "tie does not connect equal pitches", pos);
      v.pending_tie.erase(it);
    }
    v.cursor += e.duration;
    v.current.notes.push_back(std::move(e));
    v.last_event = EventRef{true, v.current.notes.size() - 1};
    v.last_was_note = true;
    if (any_tie) {
      auto& stored = v.current.notes.back();
      stored.tie_forward = true;
      auto& pending = v.pending_tie[stored.layer];
      pending.clear();
      for (const auto& h : stored.heads) pending.push_back(h.midi());
    }
  }

  void warn(std::string code, std::string message, SourcePos pos) {
    if (warnings_) warnings_->push_back({std::move(code), std::move(message), pos});
  }

  // -- assembly -------------------------------------------------------------

  Score assemble() {
    Score score;
    score.title = title_;
    score.genre = genre_;

    // declared voices without music still become (empty) parts
    for (const auto& d : declarations_) {
      bool exists = false;
      for (const auto& v : voices_) exists = exists || v->id == d.id;
      if (!exists) create_voice(d.id);
    }

    std::size_t max_measures = 0;
    for (const auto& m : measures_) max_measures = std::max(max_measures, m.size());

    // order: declaration order first, then voices met only in the body
    std::vector<std::size_t> order;
    for (const auto& d : declarations_)
      for (std::size_t k = 0; k < voices_.size(); ++k)
        if (voices_[k]->id == d.id) order.push_back(k);
    for (std::size_t k = 0; k < voices_.size(); ++k)
      if (std::find(order.begin(), order.end(), k) == order.end()) order.push_back(k);

    for (std::size_t k : order) {
      const auto& v = *voices_[k];
      Part part;
      part.part_id = v.id;
      part.declared = undeclared_.count(v.id) == 0;
      for (const auto& d : declarations_) {
        if (d.id != v.id) continue;
        part.declared_name = d.name;
        part.midi_program = d.program;
      }
      if (!part.midi_program) part.midi_program = default_program_;
      if (auto it = program_override_.find(v.id); it != program_override_.end()) part.midi_program = it->second;
      part.measures = std::move(measures_[v.part_index]);
      score.parts.push_back(std::move(part));
    }

    // pad voices that never received music
    const Part* reference = nullptr;
    for (const auto& p : score.parts)
      if (p.measures.size() == max_measures) reference = &p;
    for (auto& p : score.parts) {
      if (!p.measures.empty() || reference == nullptr || max_measures == 0) continue;
      for (std::size_t i = 0; i < max_measures; ++i) {
        Measure m;
        m.index = static_cast<int>(i);
        m.time_signature = reference->measures[i].time_signature;
        m.key_signature = key_;
        m.rests.push_back(RestEvent{0, m.time_signature.capacity(), false, std::nullopt, 0});
        p.measures.push_back(std::move(m));
      }
    }

    // prevailing tempo per measure index
    std::stable_sort(tempo_events_.begin(), tempo_events_.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& p : score.parts) {
      std::optional<Rational> tempo;
      std::size_t next = 0;
      for (auto& m : p.measures) {
        while (next < tempo_events_.size() && tempo_events_[next].first <= m.index) tempo = tempo_events_[next++].second;
        m.tempo_qpm = tempo;
      }
    }
    score.measure_count = static_cast<int>(max_measures);
    return score;
  }

  const AbcDocument& doc_;
  ParseOptions options_;
  std::vector<ParseWarning>* warnings_;

  std::optional<std::string> title_, genre_;
  TimeSignature meter_;
  KeySignature key_;
  Rational unit_{1, 2};
  std::optional<int> default_program_;
  std::vector<Declaration> declarations_;
  std::map<std::string, int> program_override_;
  std::set<std::string> undeclared_;
  std::vector<std::pair<int, Rational>> tempo_events_;  // (measure index, qpm)

  std::vector<std::unique_ptr<VoiceState>> voices_;
  std::vector<std::vector<Measure>> measures_;
  VoiceState* current_ = nullptr;

  const std::string* line_ = nullptr;
  int line_no_ = 0;
  std::size_t i_ = 0;
};

}  // namespace detail

inline Score build_score(const AbcDocument& doc, const ParseOptions& options = {},
                         std::vector<ParseWarning>* warnings = nullptr) {
  return detail::BodyParser(doc, options, warnings).run();
}

/// Parses interleaved ABC text into a Score. Throws LexError, StructureError or RangeError.
inline Score parse_abc(std::string_view text, const ParseOptions& options = {},
                       std::vector<ParseWarning>* warnings = nullptr) {
  return build_score(read_document(text), options, warnings);
}

}  // namespace scorelint::abc
