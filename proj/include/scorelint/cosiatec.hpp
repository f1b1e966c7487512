#pragma once

// Translation-invariant point-set compression. SIATEC finds every maximal translatable
// pattern with its translators; COSIATEC greedily covers the set with the best TECs.
// The structure score is the compression ratio of that cover.

#include "scorelint/metrics_common.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <set>
#include <unordered_set>
#include <vector>

namespace scorelint {

inline constexpr std::int64_t kGridPerQuarter = 16;

/// A point (onset in 1/16-quarter grid units, MIDI pitch) or a translation vector between points.
struct Point {
  std::int64_t onset = 0;
  int pitch = 0;
  friend bool operator==(const Point&, const Point&) = default;
  friend auto operator<=>(const Point&, const Point&) = default;
  Point operator+(const Point& o) const { return {onset + o.onset, pitch + o.pitch}; }
  Point operator-(const Point& o) const { return {onset - o.onset, pitch - o.pitch}; }
};

using PointSet = std::vector<Point>;  // sorted, unique

inline PointSet normalize_points(PointSet ps) {
  std::sort(ps.begin(), ps.end());
  ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
  return ps;
}

/// One point per sounding pitch at its absolute onset; tie continuations add nothing.
inline PointSet part_to_points(const Part& part) {
  PointSet ps;
  auto starts = measure_starts(part);
  for (std::size_t i = 0; i < part.measures.size(); ++i)
    for (const auto& e : part.measures[i].notes) {
      if (e.tie_backward) continue;
      std::int64_t t = round_half_down((starts[i] + e.onset) * kGridPerQuarter);
      for (const auto& h : e.heads) ps.push_back({t, h.midi()});
    }
  return normalize_points(std::move(ps));
}

/// Merged point set over all parts.
inline PointSet score_to_pointset(const Score& score) {
  if (score.parts.empty() || score.measure_count <= 0) throw EmptyScoreError("score has no measures");
  PointSet ps;
  for (const auto& p : score.parts) {
    auto part_points = part_to_points(p);
    ps.insert(ps.end(), part_points.begin(), part_points.end());
  }
  return normalize_points(std::move(ps));
}

struct TEC {
  PointSet pattern;     // sorted
  PointSet translators; // sorted, includes the zero vector
  PointSet covered;     // sorted

  Rational compression_ratio() const {
    return Rational(static_cast<std::int64_t>(covered.size()),
                    static_cast<std::int64_t>(pattern.size() + translators.size() - 1));
  }
};

namespace detail {

// Points and vectors packed into one integer; the packing preserves lexicographic order and addition.
inline constexpr std::int64_t kPitchBase = 4096;
inline constexpr std::int64_t kPitchHalf = kPitchBase / 2;

inline std::int64_t pack(const Point& p) { return p.onset * kPitchBase + p.pitch; }
inline Point unpack(std::int64_t k) {
  std::int64_t dp = ((k + kPitchHalf) % kPitchBase + kPitchBase) % kPitchBase - kPitchHalf;
  return {(k - dp) / kPitchBase, static_cast<int>(dp)};
}

struct KeyVectorHash {
  std::size_t operator()(const std::vector<std::int64_t>& v) const {
    std::uint64_t h = 1469598103934665603ULL;
    for (auto x : v) {
      h ^= static_cast<std::uint64_t>(x);
      h *= 1099511628211ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

inline bool contains(const std::vector<std::int64_t>& sorted, std::int64_t k) {
  return std::binary_search(sorted.begin(), sorted.end(), k);
}

inline TEC make_tec(const std::vector<std::int64_t>& pattern, const std::vector<std::int64_t>& translators) {
  TEC tec;
  std::vector<std::int64_t> covered;
  covered.reserve(pattern.size() * translators.size());
  for (auto t : translators)
    for (auto p : pattern) covered.push_back(p + t);
  std::sort(covered.begin(), covered.end());
  covered.erase(std::unique(covered.begin(), covered.end()), covered.end());
  for (auto k : pattern) tec.pattern.push_back(unpack(k));
  for (auto k : translators) tec.translators.push_back(unpack(k));
  for (auto k : covered) tec.covered.push_back(unpack(k));
  return tec;
}

/// Vector table: every positive difference vector with the indices of its source points.
struct VectorTable {
  std::vector<std::pair<std::int64_t, std::uint32_t>> entries;  // (vector, source index), sorted
  std::vector<std::pair<std::size_t, std::size_t>> ranges;  // one per distinct vector, ascending

  explicit VectorTable(const std::vector<std::int64_t>& keys) {
    const std::size_t n = keys.size();
    entries.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) entries.emplace_back(keys[j] - keys[i], static_cast<std::uint32_t>(i));
    std::sort(entries.begin(), entries.end());
    for (std::size_t b = 0; b < entries.size();) {
      std::size_t e = b;
      while (e < entries.size() && entries[e].first == entries[b].first) ++e;
      ranges.emplace_back(b, e);
      b = e;
    }
  }

  /// Entry range of one vector (empty when absent).
  std::pair<std::size_t, std::size_t> group(std::int64_t vec) const {
    auto lo = std::lower_bound(entries.begin(), entries.end(), std::make_pair(vec, std::uint32_t{0}));
    auto hi = lo;
    while (hi != entries.end() && hi->first == vec) ++hi;
    return {static_cast<std::size_t>(lo - entries.begin()), static_cast<std::size_t>(hi - entries.begin())};
  }
};

}  // namespace detail

/// Every maximal translatable pattern of the set with its full translator set,
/// one TEC per translational equivalence class of patterns, in canonical order.
inline std::vector<TEC> siatec(const PointSet& points) {
  PointSet ps = normalize_points(points);
  std::vector<TEC> out;
  if (ps.empty()) return out;
  std::vector<std::int64_t> keys;
  keys.reserve(ps.size());
  for (const auto& p : ps) keys.push_back(detail::pack(p));

  if (keys.size() == 1) {
    out.push_back(detail::make_tec(keys, {0}));
    return out;
  }

  detail::VectorTable table(keys);
  std::unordered_set<std::vector<std::int64_t>, detail::KeyVectorHash> seen;
  std::vector<std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>>> found;

  for (const auto& range : table.ranges) {
    std::vector<std::int64_t> pattern;
    pattern.reserve(range.second - range.first);
    for (std::size_t k = range.first; k < range.second; ++k) pattern.push_back(keys[table.entries[k].second]);
    std::vector<std::int64_t> shape(pattern.size());
    for (std::size_t k = 0; k < pattern.size(); ++k) shape[k] = pattern[k] - pattern[0];
    if (!seen.insert(shape).second) continue;

    // Translators map pattern[0] onto some point q; for patterns of two or more points, q must
    // also lie in MTP(pattern[1] - pattern[0]), which the table already holds.
    std::vector<std::int64_t> candidates;
    if (pattern.size() == 1) {
      for (auto q : keys) candidates.push_back(q - pattern[0]);
    } else {
      const auto g = table.group(pattern[1] - pattern[0]);
      for (std::size_t k = g.first; k < g.second; ++k) candidates.push_back(keys[table.entries[k].second] - pattern[0]);
    }
    std::vector<std::int64_t> translators;
    for (auto t : candidates) {
      bool ok = true;
      for (std::size_t k = 2; k < pattern.size() && ok; ++k) ok = detail::contains(keys, pattern[k] + t);
      if (ok) translators.push_back(t);
    }
    // canonical representative: shift so the smallest translator is the zero vector
    std::sort(translators.begin(), translators.end());
    const std::int64_t shift = translators.front();
    for (auto& p : pattern) p += shift;
    for (auto& t : translators) t -= shift;
    found.emplace_back(std::move(pattern), std::move(translators));
  }

  std::sort(found.begin(), found.end());
  out.reserve(found.size());
  for (const auto& [pattern, translators] : found) out.push_back(detail::make_tec(pattern, translators));
  return out;
}

inline std::int64_t bounding_box_area(const PointSet& pattern) {
  std::int64_t t0 = pattern.front().onset, t1 = t0;
  int p0 = pattern.front().pitch, p1 = p0;
  for (const auto& p : pattern) {
    t0 = std::min(t0, p.onset);
    t1 = std::max(t1, p.onset);
    p0 = std::min(p0, p.pitch);
    p1 = std::max(p1, p.pitch);
  }
  return (t1 - t0) * static_cast<std::int64_t>(p1 - p0);
}

/// Greedy preference: higher ratio, then more coverage, then smaller bounding box, then smaller pattern.
inline bool better_tec(const TEC& a, const TEC& b) {
  auto ra = a.compression_ratio(), rb = b.compression_ratio();
  if (ra != rb) return ra > rb;
  if (a.covered.size() != b.covered.size()) return a.covered.size() > b.covered.size();
  auto aa = bounding_box_area(a.pattern), ab = bounding_box_area(b.pattern);
  if (aa != ab) return aa < ab;
  return a.pattern < b.pattern;
}

struct CosiatecResult {
  std::vector<TEC> cover;
  Rational structure_score{1};
};

/// |points| / sum over the cover of (|pattern| + |translators| - 1).
inline Rational cover_score(std::size_t points, const std::vector<TEC>& cover) {
  std::int64_t cost = 0;
  for (const auto& t : cover) cost += static_cast<std::int64_t>(t.pattern.size() + t.translators.size() - 1);
  return Rational(static_cast<std::int64_t>(points), cost);
}

inline CosiatecResult cosiatec_cover(const PointSet& points) {
  PointSet residual = normalize_points(points);
  if (residual.empty()) throw EmptyScoreError("empty point set");
  const std::size_t total = residual.size();
  CosiatecResult result;
  while (!residual.empty()) {
    auto tecs = siatec(residual);
    const TEC* best = &tecs.front();
    for (const auto& t : tecs)
      if (better_tec(t, *best)) best = &t;
    PointSet next;
    std::set_difference(residual.begin(), residual.end(), best->covered.begin(), best->covered.end(),
                        std::back_inserter(next));
    result.cover.push_back(*best);
    residual = std::move(next);
  }
  result.structure_score = cover_score(total, result.cover);
  return result;
}

inline constexpr std::size_t kDefaultMaxStructurePoints = 5000;

struct StructureOptions {
  bool per_part = false;
  std::size_t max_points = kDefaultMaxStructurePoints;
};

struct StructureResult {
  Rational score{1};
  std::size_t points = 0;       // points analysed
  std::size_t input_points = 0; // points before decimation
  bool decimated = false;
  std::size_t cover_size = 0;
};

/// Guardrail for large inputs: drop the upper note of doubled octaves, then keep the earliest points.
inline PointSet decimate(const PointSet& ps, std::size_t max_points) {
  if (ps.size() <= max_points) return ps;
  std::vector<std::int64_t> keys;
  for (const auto& p : ps) keys.push_back(detail::pack(p));
  PointSet out;
  for (const auto& p : ps)
    if (!detail::contains(keys, detail::pack({p.onset, p.pitch - 12}))) out.push_back(p);
  if (out.size() > max_points) out.resize(max_points);
  return out;
}

inline StructureResult structure_of_points(const PointSet& ps, std::size_t max_points) {
  StructureResult r;
  r.input_points = ps.size();
  PointSet used = decimate(ps, max_points);
  r.decimated = used.size() != ps.size();
  r.points = used.size();
  auto cover = cosiatec_cover(used);
  r.score = cover.structure_score;
  r.cover_size = cover.cover.size();
  return r;
}

/// Whole-score structure; with per_part, the mean of the scores of parts that have notes.
inline StructureResult evaluate_structure(const Score& score, const StructureOptions& opts = {}) {
  if (!opts.per_part) {
    auto ps = score_to_pointset(score);
    if (ps.empty()) throw EmptyScoreError("score has no notes");
    return structure_of_points(ps, opts.max_points);
  }
  StructureResult total;
  total.score = 0;
  std::int64_t counted = 0;
  for (const auto& part : score.parts) {
    auto ps = part_to_points(part);
    if (ps.empty()) continue;
    auto r = structure_of_points(ps, opts.max_points);
    total.score += r.score;
    total.points += r.points;
    total.input_points += r.input_points;
    total.decimated = total.decimated || r.decimated;
    total.cover_size += r.cover_size;
    ++counted;
  }
  if (counted == 0) throw EmptyScoreError("score has no notes");
  total.score /= counted;
  return total;
}

}  // namespace scorelint
