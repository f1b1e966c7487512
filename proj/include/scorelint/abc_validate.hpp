#pragma once

#include "scorelint/abc_parser.hpp"

#include <string>
#include <vector>

namespace scorelint::abc {

enum class Severity { error, warning };

struct ValidationIssue {
  Severity severity = Severity::error;
  std::string code;
  int measure_index = -1;  // -1 when not tied to a measure
  std::string part_id;
  std::string message;
};

struct ValidationReport {
  bool is_valid = true;
  std::vector<ValidationIssue> issues;

  std::size_t error_count() const {
    std::size_t n = 0;
    for (const auto& i : issues) n += i.severity == Severity::error;
    return n;
  }
  std::size_t warning_count() const { return issues.size() - error_count(); }
  bool has(std::string_view code) const {
    for (const auto& i : issues)
      if (i.code == code) return true;
    return false;
  }

  void add(Severity s, std::string code, int measure, std::string part, std::string message) {
    issues.push_back({s, std::move(code), measure, std::move(part), std::move(message)});
    if (s == Severity::error) is_valid = false;
  }
};

/// Checks measure capacities, part alignment and voice declarations.
/// A short first measure (anacrusis) or short final measure is only a warning.
inline ValidationReport validate(const Score& score) {
  ValidationReport report;
  if (score.parts.empty()) {
    report.add(Severity::error, "NO_PARTS", -1, "", "score has no parts");
    return report;
  }
  std::size_t expected = static_cast<std::size_t>(score.measure_count);
  bool any_tempo = false;
  for (const auto& part : score.parts) {
    if (!part.declared)
      report.add(Severity::error, "UNDECLARED_VOICE", -1, part.part_id,
                 "voice '" + part.part_id + "' is used but never declared");
    if (part.measures.size() != expected)
      report.add(Severity::error, "PART_LENGTH_MISMATCH", -1, part.part_id,
                 "part has " + std::to_string(part.measures.size()) + " measures, score has " +
                     std::to_string(expected));
    if (!part.has_notes()) report.add(Severity::warning, "EMPTY_PART", -1, part.part_id, "part contains no notes");

    const std::size_t n = part.measures.size();
    for (std::size_t i = 0; i < n; ++i) {
      const auto& m = part.measures[i];
      if (m.tempo_qpm) any_tempo = true;
      Rational filled = m.content_duration();
      Rational capacity = m.time_signature.capacity();
      int idx = static_cast<int>(i);
      if (filled > capacity) {
        report.add(Severity::error, "MEASURE_OVERFULL", idx, part.part_id,
                   "measure holds " + scorelint::to_string(filled) + " quarters, capacity " + scorelint::to_string(capacity));
      } else if (filled < capacity) {
        if (i == 0 && n > 1) {
          report.add(Severity::warning, "ANACRUSIS", idx, part.part_id, "short pickup measure");
        } else if (i + 1 == n) {
          report.add(Severity::warning, "SHORT_FINAL_MEASURE", idx, part.part_id, "short final measure");
        } else {
          report.add(Severity::error, "MEASURE_UNDERFULL", idx, part.part_id,
                     "measure holds " + scorelint::to_string(filled) + " quarters, capacity " + scorelint::to_string(capacity));
        }
      }
    }
  }
  if (!any_tempo) report.add(Severity::warning, "MISSING_TEMPO", -1, "", "no tempo marking");
  return report;
}

/// Parses and validates; parse failures become error issues instead of exceptions.
inline ValidationReport validate_abc(std::string_view text, Score* parsed = nullptr,
                                     std::vector<ParseWarning>* warnings = nullptr) {
  ValidationReport report;
  try {
    ParseOptions opts;
    opts.allow_undeclared_voices = true;
    Score score = parse_abc(text, opts, warnings);
    report = validate(score);
    if (parsed) *parsed = std::move(score);
  } catch (const ParseError& e) {
    report.add(Severity::error, e.code(), -1, "", e.what());
  }
  return report;
}

inline const char* to_string(Severity s) { return s == Severity::error ? "error" : "warning"; }

}  // namespace scorelint::abc
