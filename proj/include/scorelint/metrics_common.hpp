#pragma once

#include "scorelint/score.hpp"

#include <optional>
#include <vector>

namespace scorelint {

/// A percentage in [0, 100]; nullopt marks a not-applicable constituent.
using Pct = std::optional<Rational>;

class NoApplicableMetrics : public Error {
 public:
  NoApplicableMetrics() : Error("no applicable metric scores") {}
};

inline Rational percent(std::int64_t good, std::int64_t total) { return Rational(100 * good, total); }

/// Unweighted mean of the applicable values; throws NoApplicableMetrics when there are none.
inline Rational macro_average(const std::vector<Pct>& values) {
  Rational sum{0};
  std::int64_t n = 0;
  for (const auto& v : values) {
    if (!v) continue;
    sum += *v;
    ++n;
  }
  if (n == 0) throw NoApplicableMetrics();
  return sum / n;
}

/// Note event with its onset measured from the start of the piece.
struct AbsoluteEvent {
  Rational onset;
  Rational duration;
  const NoteEvent* event;
  Rational offset() const { return onset + duration; }
};

/// All note events of a part in piece time, ordered by onset (stable on measure order).
inline std::vector<AbsoluteEvent> absolute_events(const Part& part) {
  std::vector<AbsoluteEvent> out;
  auto starts = measure_starts(part);
  for (std::size_t i = 0; i < part.measures.size(); ++i)
    for (const auto& e : part.measures[i].notes) out.push_back({starts[i] + e.onset, e.duration, &e});
  std::stable_sort(out.begin(), out.end(), [](const AbsoluteEvent& a, const AbsoluteEvent& b) { return a.onset < b.onset; });
  return out;
}

}  // namespace scorelint
