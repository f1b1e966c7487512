#pragma once

// Instrument constraint table: ranges, chord spans, monophony and name aliases.

#include "scorelint/score.hpp"

#include "json.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace scorelint {

struct InstrumentConstraints {
  std::string canonical_name;
  std::set<std::string> aliases;  // lower-case, includes the canonical name
  int lowest_midi = 0;
  int highest_midi = 127;
  std::optional<int> max_span_semitones;  // nullopt = unbounded
  bool monophonic = false;
  std::set<int> gm_programs;  // General MIDI programs (0-based) bound to this instrument

  friend bool operator==(const InstrumentConstraints&, const InstrumentConstraints&) = default;
};

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

/// Case-folds a part name and strips ordinal and transposition suffixes:
/// "Violin II" -> "violin", "Clarinet in Bb 1" -> "clarinet", "2nd Horn" -> "horn".
inline std::string normalize_instrument_name(std::string_view name) {
  std::string s = to_lower(name);
  for (char& c : s)
    if (c == '.' || c == '_' || c == '-' || c == ',' || c == '(' || c == ')') c = ' ';

  std::vector<std::string> words;
  std::size_t pos = 0;
  while (pos < s.size()) {
    auto b = s.find_first_not_of(' ', pos);
    if (b == std::string::npos) break;
    auto e = s.find(' ', b);
    if (e == std::string::npos) e = s.size();
    words.push_back(s.substr(b, e - b));
    pos = e;
  }

  static const std::set<std::string> kOrdinals{"i",   "ii",  "iii", "iv",  "v",   "vi",
                                               "1st", "2nd", "3rd", "4th", "5th", "6th",
                                               "first", "second", "third", "fourth"};
  auto is_ordinal = [&](const std::string& w) {
    if (kOrdinals.count(w)) return true;
    return !w.empty() && std::all_of(w.begin(), w.end(), [](unsigned char c) { return std::isdigit(c); });
  };

  // "in Bb", "in F", "in A" transposition suffix
  for (std::size_t i = 0; i + 1 < words.size(); ++i) {
    if (words[i] == "in" && words[i + 1].size() <= 2 && std::isalpha(static_cast<unsigned char>(words[i + 1][0])) &&
        words[i + 1][0] >= 'a' && words[i + 1][0] <= 'g') {
      words.erase(words.begin() + static_cast<std::ptrdiff_t>(i), words.begin() + static_cast<std::ptrdiff_t>(i + 2));
      break;
    }
  }
  while (words.size() > 1 && is_ordinal(words.back())) words.pop_back();
  while (words.size() > 1 && is_ordinal(words.front())) words.erase(words.begin());

  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

class ConstraintTable {
 public:
  ConstraintTable() = default;
  explicit ConstraintTable(std::vector<InstrumentConstraints> entries) {
    for (auto& e : entries) upsert(std::move(e));
  }

  /// Adds an entry, replacing any entry with the same canonical name.
  void upsert(InstrumentConstraints entry) {
    entry.aliases.insert(to_lower(entry.canonical_name));
    std::set<std::string> normalized;
    for (const auto& a : entry.aliases) normalized.insert(normalize_instrument_name(a));
    entry.aliases = std::move(normalized);
    auto it = std::find_if(entries_.begin(), entries_.end(),
                           [&](const auto& e) { return e.canonical_name == entry.canonical_name; });
    if (it != entries_.end())
      *it = std::move(entry);
    else
      entries_.push_back(std::move(entry));
    rebuild_index();
  }

  const std::vector<InstrumentConstraints>& entries() const { return entries_; }

  const InstrumentConstraints* find_by_name(std::string_view name) const {
    auto it = by_alias_.find(normalize_instrument_name(name));
    return it == by_alias_.end() ? nullptr : &entries_[it->second];
  }

  const InstrumentConstraints* find_by_program(int program) const {
    auto it = by_program_.find(program);
    return it == by_program_.end() ? nullptr : &entries_[it->second];
  }

  const InstrumentConstraints* find_canonical(std::string_view canonical) const {
    for (const auto& e : entries_)
      if (e.canonical_name == canonical) return &e;
    return nullptr;
  }

 private:
  void rebuild_index() {
    by_alias_.clear();
    by_program_.clear();
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      for (const auto& a : entries_[i].aliases) by_alias_.emplace(a, i);
      for (int p : entries_[i].gm_programs) by_program_.emplace(p, i);
    }
  }

  std::vector<InstrumentConstraints> entries_;
  std::map<std::string, std::size_t> by_alias_;
  std::map<int, std::size_t> by_program_;
};

/// Fallback for parts that resolve to no table entry.
inline InstrumentConstraints permissive_constraints(std::string name) {
  InstrumentConstraints c;
  c.aliases.insert(to_lower(name));
  c.canonical_name = std::move(name);
  return c;
}

/// How a part's instrument was resolved.
enum class Binding { program, name, part_id, unresolved };

struct InstrumentBinding {
  std::string instrument;  // canonical name, or the raw name when unresolved
  InstrumentConstraints constraints;
  Binding via = Binding::unresolved;
};

/// Binds a part to an instrument: %%MIDI program first, then the V: name, then the voice id.
inline InstrumentBinding bind_instrument(const Part& part, const ConstraintTable& table) {
  if (part.midi_program) {
    if (const auto* c = table.find_by_program(*part.midi_program)) return {c->canonical_name, *c, Binding::program};
  }
  if (!part.declared_name.empty()) {
    if (const auto* c = table.find_by_name(part.declared_name)) return {c->canonical_name, *c, Binding::name};
  }
  if (const auto* c = table.find_by_name(part.part_id)) return {c->canonical_name, *c, Binding::part_id};
  std::string raw = part.declared_name.empty() ? part.part_id : part.declared_name;
  return {raw, permissive_constraints(raw), Binding::unresolved};
}

// ---------------------------------------------------------------------------
// Config records: {canonical, aliases, L, U, S_max|"inf", monophonic, gm_programs}

inline nlohmann::json to_json(const InstrumentConstraints& c) {
  nlohmann::json j;
  j["canonical"] = c.canonical_name;
  j["aliases"] = std::vector<std::string>(c.aliases.begin(), c.aliases.end());
  j["L"] = c.lowest_midi;
  j["U"] = c.highest_midi;
  if (c.max_span_semitones)
    j["S_max"] = *c.max_span_semitones;
  else
    j["S_max"] = "inf";
  j["monophonic"] = c.monophonic;
  j["gm_programs"] = std::vector<int>(c.gm_programs.begin(), c.gm_programs.end());
  return j;
}

inline InstrumentConstraints constraints_from_json(const nlohmann::json& j) {
  InstrumentConstraints c;
  c.canonical_name = j.at("canonical").get<std::string>();
  if (j.contains("aliases"))
    for (const auto& a : j.at("aliases")) c.aliases.insert(to_lower(a.get<std::string>()));
  c.aliases.insert(to_lower(c.canonical_name));
  c.lowest_midi = j.at("L").get<int>();
  c.highest_midi = j.at("U").get<int>();
  if (c.lowest_midi > c.highest_midi) throw Error("instrument " + c.canonical_name + ": L > U");
  const auto& span = j.at("S_max");
  if (span.is_string()) {
    if (span.get<std::string>() != "inf") throw Error("instrument " + c.canonical_name + ": bad S_max");
  } else {
    c.max_span_semitones = span.get<int>();
  }
  c.monophonic = j.value("monophonic", false);
  if (j.contains("gm_programs"))
    for (const auto& p : j.at("gm_programs")) c.gm_programs.insert(p.get<int>());
  return c;
}

namespace detail {

inline InstrumentConstraints make(std::string name, std::set<std::string> aliases, int lo, int hi,
                                  std::optional<int> span, bool mono, std::set<int> programs) {
  aliases.insert(to_lower(name));
  return InstrumentConstraints{std::move(name), std::move(aliases), lo, hi, span, mono, std::move(programs)};
}

}  // namespace detail

/// Built-in table: sounding ranges of standard orchestral, choral and jazz instruments.
inline const ConstraintTable& default_constraint_table() {
  using detail::make;
  static const ConstraintTable table(std::vector<InstrumentConstraints>{
      // keyboards
      make("Piano", {"pianoforte", "grand piano", "acoustic grand piano", "klavier", "pno", "pf",
                     "right hand", "left hand", "rh", "lh"}, 21, 108, 15, false, {0, 1, 2, 3}),
      make("Electric Piano", {"e piano", "rhodes", "epiano"}, 28, 103, 15, false, {4, 5}),
      make("Harpsichord", {"cembalo", "clavecin"}, 29, 89, 15, false, {6}),
      make("Celesta", {"celeste"}, 60, 108, 15, false, {8}),
      make("Organ", {"pipe organ", "church organ", "hammond organ", "orgel"}, 24, 96, 15, false,
           {16, 17, 18, 19, 20}),
      // plucked
      make("Harp", {"concert harp", "arpa", "harfe", "orchestral harp"}, 23, 104, 15, false, {46}),
      make("Guitar", {"acoustic guitar", "classical guitar", "electric guitar", "gtr", "nylon guitar"},
           40, 88, 24, false, {24, 25, 26, 27, 28, 29, 30, 31}),
      // woodwinds
      make("Piccolo", {"picc", "ottavino"}, 74, 108, std::nullopt, true, {72}),
      make("Flute", {"fl", "flauto", "flöte", "flute traversiere", "transverse flute"}, 60, 96, std::nullopt, true,
           {73}),
      make("Recorder", {"alto recorder", "soprano recorder", "blockflöte"}, 60, 98, std::nullopt, true, {74}),
      make("Oboe", {"ob", "oboe d'amore", "hautbois"}, 58, 91, std::nullopt, true, {68}),
      make("English Horn", {"cor anglais", "corno inglese", "englischhorn"}, 52, 81, std::nullopt, true, {69}),
      make("Clarinet", {"cl", "clarinetto", "klarinette", "clarinette"}, 50, 94, std::nullopt, true, {71}),
      make("Bass Clarinet", {"bass cl", "clarinetto basso", "bassklarinette"}, 38, 77, std::nullopt, true, {}),
      make("Bassoon", {"bsn", "fagotto", "fagott", "basson"}, 34, 75, std::nullopt, true, {70}),
      make("Contrabassoon", {"double bassoon", "contrafagotto", "kontrafagott"}, 22, 53, std::nullopt, true, {}),
      make("Soprano Saxophone", {"soprano sax"}, 56, 88, std::nullopt, true, {64}),
      make("Alto Saxophone", {"alto sax", "saxophone", "sax"}, 49, 81, std::nullopt, true, {65}),
      make("Tenor Saxophone", {"tenor sax"}, 44, 76, std::nullopt, true, {66}),
      make("Baritone Saxophone", {"baritone sax", "bari sax"}, 36, 69, std::nullopt, true, {67}),
      // brass
      make("Horn", {"french horn", "corno", "horn in f", "cor", "hn"}, 34, 77, std::nullopt, true, {60}),
      make("Trumpet", {"tpt", "tromba", "trompete", "trompette", "cornet", "flugelhorn"}, 54, 82, std::nullopt,
           true, {56, 59}),
      make("Trombone", {"tbn", "posaune", "trombone tenore", "bass trombone"}, 34, 72, std::nullopt, true, {57}),
      make("Tuba", {"bass tuba", "tb"}, 28, 58, std::nullopt, true, {58}),
      // strings
      make("Violin", {"vln", "vn", "violino", "violine", "geige", "fiddle", "violon"}, 55, 103, 24, false, {40}),
      make("Viola", {"vla", "va", "bratsche", "alto viola"}, 48, 91, 24, false, {41}),
      make("Cello", {"violoncello", "vc", "vlc", "vcl", "violoncelle", "cello solo"}, 36, 76, 24, false, {42}),
      make("Double Bass", {"contrabass", "string bass", "acoustic bass", "upright bass", "kontrabass", "cb", "db",
                           "contrabbasso"}, 28, 67, 12, false, {32, 43}),
      make("Electric Bass", {"bass guitar", "e bass", "fretless bass"}, 28, 67, std::nullopt, true,
           {33, 34, 35, 36, 37}),
      make("Strings", {"string ensemble", "string orchestra", "strings ensemble"}, 28, 103, std::nullopt, false,
           {48, 49}),
      // voices
      make("Soprano", {"soprano voice", "s", "sopran", "treble voice"}, 60, 81, std::nullopt, true, {}),
      make("Alto", {"alto voice", "contralto", "mezzo soprano", "a"}, 53, 77, std::nullopt, true, {}),
      make("Tenor", {"tenor voice", "t"}, 48, 69, std::nullopt, true, {}),
      make("Bass", {"bass voice", "basso", "b"}, 40, 64, std::nullopt, true, {}),
      make("Voice", {"vocals", "vocal", "voice oohs", "melody", "singer"}, 48, 84, std::nullopt, true, {53, 54}),
      make("Choir", {"chorus", "choir aahs", "satb"}, 40, 81, std::nullopt, false, {52}),
      // pitched percussion
      make("Timpani", {"timp", "pauken", "kettle drums"}, 40, 57, 24, false, {47}),
      make("Glockenspiel", {"glock", "orchestra bells"}, 79, 108, 24, false, {9}),
      make("Vibraphone", {"vibes", "vib"}, 53, 89, 24, false, {11}),
      make("Marimba", {"mar"}, 45, 96, 24, false, {12}),
      make("Xylophone", {"xyl", "xylo"}, 65, 108, 24, false, {13}),
  });
  return table;
}

inline nlohmann::json to_json(const ConstraintTable& table) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : table.entries()) arr.push_back(to_json(e));
  return arr;
}

}  // namespace scorelint
