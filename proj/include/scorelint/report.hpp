#pragma once

// Per-file metric reports, corpus aggregation and the JSON / CSV renderings.

#include "scorelint/abc.hpp"
#include "scorelint/adherence.hpp"
#include "scorelint/config.hpp"
#include "scorelint/cosiatec.hpp"
#include "scorelint/plan.hpp"
#include "scorelint/playability.hpp"
#include "scorelint/readability.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#ifndef SCORELINT_VERSION
#define SCORELINT_VERSION "0.0.0"
#endif

namespace scorelint {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr const char* kToolVersion = SCORELINT_VERSION;
inline constexpr const char* kStructureDefinition =
    "compression ratio of the greedy COSIATEC cover of (onset in 1/16 quarters, MIDI pitch) points";

class IoError : public Error {
 public:
  using Error::Error;
};

class EmptyCorpus : public Error {
 public:
  using Error::Error;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading " + path.string());
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << data;
  if (!out) throw IoError("error writing " + path.string());
}

struct StructureReport {
  StructureResult result;
  bool per_part = false;
};

struct MetricReport {
  std::string piece_id;
  abc::ValidationReport validity;
  std::vector<abc::ParseWarning> parse_warnings;
  std::optional<PlayabilityResult> playability;
  std::optional<ReadabilityResult> readability;
  std::optional<UtilizationResult> utilization;
  std::optional<AdherenceResult> adherence;
  std::optional<StructureReport> structure;
  std::optional<std::string> plan_error;
  std::vector<std::string> notes;
  std::optional<double> external_similarity;  // reserved for an out-of-tree scorer
  std::string tool_version = kToolVersion;
  std::string config_fingerprint;
};

/// Runs validation and, for valid scores, every metric family.
inline MetricReport evaluate_text(std::string piece_id, std::string_view abc_text, const std::optional<PlanDocument>& plan,
                                  const EvaluationConfig& config, const std::string& fingerprint) {
  MetricReport r;
  r.piece_id = std::move(piece_id);
  r.config_fingerprint = fingerprint;
  Score score;
  r.validity = abc::validate_abc(abc_text, &score, &r.parse_warnings);
  if (!r.validity.is_valid) return r;

  r.playability = evaluate_playability(score, config.instruments);
  r.readability = evaluate_readability(score, config.instruments, JitterOptions{config.jitter_strict});
  r.utilization = evaluate_utilization(score, config.instruments);
  if (plan) r.adherence = evaluate_adherence(*plan, score, config.instruments, config.tempo_tolerance);
  try {
    StructureReport s;
    s.per_part = config.per_part_structure;
    s.result = evaluate_structure(score, StructureOptions{config.per_part_structure, config.max_structure_points});
    if (s.result.decimated)
      r.notes.push_back("structure: decimated " + std::to_string(s.result.input_points) + " points to " +
                        std::to_string(s.result.points));
    r.structure = s;
  } catch (const EmptyScoreError&) {
    r.notes.push_back("structure: score has no notes");
  }
  return r;
}

inline MetricReport evaluate_file(const std::filesystem::path& path, const std::optional<std::filesystem::path>& plan_path,
                                  const EvaluationConfig& config, std::string piece_id = {}) {
  std::string text = read_file(path);
  std::optional<PlanDocument> plan;
  std::optional<std::string> plan_error;
  if (plan_path) {
    try {
      plan = read_plan(read_file(*plan_path));
    } catch (const SchemaError& e) {
      plan_error = e.what();
    }
  }
  if (piece_id.empty()) piece_id = path.filename().string();
  auto r = evaluate_text(std::move(piece_id), text, plan, config, config_fingerprint(config));
  r.plan_error = plan_error;
  return r;
}

// ---------------------------------------------------------------------------
// Summary rows, in results-table order

inline const std::vector<const char*>& summary_metric_names() {
  static const std::vector<const char*> names{
      "pitch_range",      "monophonic",         "pitch_span",
      "rhythmic_overlap", "total_playability",  "tie_complexity",
      "rhythmic_jitter",  "accidental_consistency", "enharmonic_direction",
      "total_readability", "tempo_match",       "key_match",
      "time_match",       "instrument_match",   "external_similarity",
      "coverage_ratio",   "active_density",     "structure"};
  return names;
}

/// Value rounded to two decimals, kept exact.
inline Rational round2(const Rational& r) { return Rational(round_half_even(r * 100), 100); }

namespace detail {

template <typename PartT, typename F>
std::optional<Rational> mean_over_active(const std::vector<PartT>& parts, F field) {
  Rational sum{0};
  std::int64_t n = 0;
  for (const auto& p : parts) {
    if (!p.active) continue;
    if (auto v = field(p)) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

inline std::optional<Rational> opt_round2(const std::optional<Rational>& v) {
  if (!v) return std::nullopt;
  return round2(*v);
}

}  // namespace detail

/// One rounded value per summary metric; nullopt where the metric does not apply.
inline std::vector<std::optional<Rational>> summary_values(const MetricReport& r) {
  std::vector<std::optional<Rational>> v(summary_metric_names().size());
  if (r.playability) {
    const auto& parts = r.playability->parts;
    v[0] = detail::mean_over_active(parts, [](const PartPlayability& p) { return p.pitch_range; });
    v[1] = detail::mean_over_active(parts, [](const PartPlayability& p) { return p.monophonic; });
    v[2] = detail::mean_over_active(parts, [](const PartPlayability& p) { return p.pitch_span; });
    v[3] = detail::mean_over_active(parts, [](const PartPlayability& p) { return p.overlap; });
    v[4] = r.playability->total;
  }
  if (r.readability) {
    const auto& parts = r.readability->parts;
    v[5] = detail::mean_over_active(parts, [](const PartReadability& p) { return p.tie_complexity; });
    v[6] = detail::mean_over_active(parts, [](const PartReadability& p) { return p.jitter; });
    v[7] = detail::mean_over_active(parts, [](const PartReadability& p) { return p.accidental_consistency; });
    v[8] = detail::mean_over_active(parts, [](const PartReadability& p) { return p.enharmonic; });
    v[9] = r.readability->total;
  }
  if (r.adherence) {
    v[10] = Rational(r.adherence->tempo.match ? 100 : 0);
    v[11] = Rational(r.adherence->key.match() ? 100 : 0);
    v[12] = Rational(r.adherence->time_match ? 100 : 0);
    v[13] = r.adherence->instruments.pct;
  }
  if (r.external_similarity) v[14] = round2(rational_from_double(*r.external_similarity, 1000000));
  if (r.utilization) {
    v[15] = r.utilization->mean_coverage_pct;
    v[16] = r.utilization->mean_density_pct;
  }
  if (r.structure) v[17] = r.structure->result.score;
  for (auto& x : v) x = detail::opt_round2(x);
  return v;
}

struct MetricDistribution {
  std::string metric;
  std::int64_t n = 0;
  std::optional<Rational> mean, min, median, max;
};

struct CorpusSummary {
  std::int64_t n_files = 0;
  std::int64_t n_valid = 0;
  Rational valid_pct{0};
  std::vector<MetricDistribution> rows;
  bool comparable = true;  // all reports share one config fingerprint
  std::set<std::string> fingerprints;
};

/// Aggregates over valid files only, from the same rounded values the per-file reports carry.
inline CorpusSummary summarize(const std::vector<MetricReport>& reports) {
  CorpusSummary s;
  s.n_files = static_cast<std::int64_t>(reports.size());
  const auto& names = summary_metric_names();
  std::vector<std::vector<Rational>> columns(names.size());
  for (const auto& r : reports) {
    s.fingerprints.insert(r.config_fingerprint);
    if (!r.validity.is_valid) continue;
    ++s.n_valid;
    auto values = summary_values(r);
    for (std::size_t k = 0; k < names.size(); ++k)
      if (values[k]) columns[k].push_back(*values[k]);
  }
  s.comparable = s.fingerprints.size() <= 1;
  if (s.n_files > 0) s.valid_pct = percent(s.n_valid, s.n_files);
  for (std::size_t k = 0; k < names.size(); ++k) {
    MetricDistribution d;
    d.metric = names[k];
    auto& col = columns[k];
    d.n = static_cast<std::int64_t>(col.size());
    if (!col.empty()) {
      std::sort(col.begin(), col.end());
      Rational sum{0};
      for (const auto& x : col) sum += x;
      d.mean = sum / d.n;
      d.min = col.front();
      d.max = col.back();
      std::size_t mid = col.size() / 2;
      d.median = col.size() % 2 == 1 ? col[mid] : (col[mid - 1] + col[mid]) / 2;
    }
    s.rows.push_back(std::move(d));
  }
  return s;
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline nlohmann::json num(const std::optional<Rational>& v) {
  if (!v) return nullptr;
  return rounded_double(*v);
}

}  // namespace detail

inline nlohmann::json to_json(const abc::ValidationReport& v) {
  nlohmann::json issues = nlohmann::json::array();
  for (const auto& i : v.issues) {
    nlohmann::json j{{"severity", abc::to_string(i.severity)}, {"code", i.code}, {"message", i.message}};
    j["measure"] = i.measure_index >= 0 ? nlohmann::json(i.measure_index) : nlohmann::json(nullptr);
    j["part"] = i.part_id.empty() ? nlohmann::json(nullptr) : nlohmann::json(i.part_id);
    issues.push_back(std::move(j));
  }
  return {{"is_valid", v.is_valid},
          {"error_count", v.error_count()},
          {"warning_count", v.warning_count()},
          {"issues", std::move(issues)}};
}

inline nlohmann::json to_json(const PlayabilityResult& p) {
  nlohmann::json parts = nlohmann::json::array();
  for (const auto& x : p.parts)
    parts.push_back({{"part_id", x.part_id},
                     {"instrument", x.instrument},
                     {"resolved", x.resolved},
                     {"active", x.active},
                     {"pitch_range_pct", detail::num(x.pitch_range)},
                     {"pitch_span_pct", detail::num(x.pitch_span)},
                     {"monophonic_pct", detail::num(x.monophonic)},
                     {"overlap_pct", detail::num(x.overlap)}});
  return {{"per_part", std::move(parts)}, {"total_pct", detail::num(p.total)}, {"warnings", p.warnings}};
}

inline nlohmann::json to_json(const ReadabilityResult& p) {
  nlohmann::json parts = nlohmann::json::array();
  for (const auto& x : p.parts)
    parts.push_back({{"part_id", x.part_id},
                     {"instrument", x.instrument},
                     {"active", x.active},
                     {"jitter_pct", detail::num(x.jitter)},
                     {"tie_complexity_pct", detail::num(x.tie_complexity)},
                     {"accidental_consistency_pct", detail::num(x.accidental_consistency)},
                     {"enharmonic_pct", detail::num(x.enharmonic)}});
  return {{"per_part", std::move(parts)}, {"total_pct", detail::num(p.total)}};
}

inline nlohmann::json to_json(const UtilizationResult& u) {
  nlohmann::json parts = nlohmann::json::array();
  for (const auto& x : u.parts) {
    nlohmann::json j{{"part_id", x.part_id},
                     {"instrument", x.instrument},
                     {"active_measure_count", x.active_measure_count},
                     {"coverage_pct", rounded_double(x.coverage_pct)},
                     {"density_pct", rounded_double(x.density_pct)}};
    j["m_first"] = x.m_first ? nlohmann::json(*x.m_first) : nlohmann::json(nullptr);
    j["m_last"] = x.m_last ? nlohmann::json(*x.m_last) : nlohmann::json(nullptr);
    parts.push_back(std::move(j));
  }
  return {{"per_part", std::move(parts)},
          {"mean_coverage_pct", detail::num(u.mean_coverage_pct)},
          {"mean_density_pct", detail::num(u.mean_density_pct)}};
}

inline nlohmann::json to_json(const AdherenceResult& a) {
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& t : a.instruments.trace)
    trace.push_back({{"side", t.side}, {"raw", t.raw}, {"resolved", t.resolved}, {"via", t.via}});
  nlohmann::json tempo{{"match", a.tempo.match},
                       {"near_miss", a.tempo.near_miss},
                       {"plan_qpm", rounded_double(a.tempo.plan_qpm)},
                       {"score_qpm", detail::num(a.tempo.score_qpm)},
                       {"warnings", a.tempo.warnings}};
  return {{"tempo", std::move(tempo)},
          {"key", {{"match", a.key.match()},
                   {"level", to_string(a.key.level)},
                   {"plan", a.plan_key.to_string()},
                   {"score", a.score_key.to_string()}}},
          {"time_signature", {{"match", a.time_match},
                              {"plan", a.plan_time.to_string()},
                              {"score", a.score_time.to_string()}}},
          {"instruments", {{"match_pct", rounded_double(a.instruments.pct)},
                           {"method", "jaccard"},
                           {"plan", a.instruments.plan_set},
                           {"score", a.instruments.score_set},
                           {"trace", std::move(trace)}}},
          {"notes", a.notes}};
}

inline nlohmann::json to_json(const StructureReport& s) {
  return {{"score", rounded_double(s.result.score)},
          {"points", s.result.points},
          {"input_points", s.result.input_points},
          {"decimated", s.result.decimated},
          {"cover_size", s.result.cover_size},
          {"mode", s.per_part ? "per_part_mean" : "merged"},
          {"definition", kStructureDefinition}};
}

template <typename T>
nlohmann::json optional_json(const std::optional<T>& v) {
  if (!v) return nullptr;
  return to_json(*v);
}

inline nlohmann::json to_json(const MetricReport& r) {
  nlohmann::json warnings = nlohmann::json::array();
  for (const auto& w : r.parse_warnings)
    warnings.push_back({{"code", w.code}, {"message", w.message}, {"line", w.pos.line}});
  nlohmann::json j{{"schema_version", kReportSchemaVersion},
                   {"piece_id", r.piece_id},
                   {"validity", to_json(r.validity)},
                   {"parse_warnings", std::move(warnings)},
                   {"playability", optional_json(r.playability)},
                   {"readability", optional_json(r.readability)},
                   {"utilization", optional_json(r.utilization)},
                   {"adherence", optional_json(r.adherence)},
                   {"structure", optional_json(r.structure)},
                   {"notes", r.notes},
                   {"tool_version", r.tool_version},
                   {"config_fingerprint", r.config_fingerprint}};
  j["structure_score"] = r.structure ? nlohmann::json(rounded_double(r.structure->result.score)) : nlohmann::json(nullptr);
  j["external_similarity"] = r.external_similarity ? nlohmann::json(*r.external_similarity) : nlohmann::json(nullptr);
  j["plan_error"] = r.plan_error ? nlohmann::json(*r.plan_error) : nlohmann::json(nullptr);
  return j;
}

inline nlohmann::json to_json(const CorpusSummary& s) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& d : s.rows)
    rows.push_back({{"metric", d.metric},
                    {"n", d.n},
                    {"mean", detail::num(d.mean)},
                    {"min", detail::num(d.min)},
                    {"median", detail::num(d.median)},
                    {"max", detail::num(d.max)}});
  return {{"n_files", s.n_files},
          {"n_valid", s.n_valid},
          {"valid_pct", rounded_double(s.valid_pct)},
          {"metrics", std::move(rows)},
          {"comparable", s.comparable},
          {"config_fingerprints", s.fingerprints}};
}

// ---------------------------------------------------------------------------
// Corpus evaluation

struct CorpusResult {
  std::vector<MetricReport> reports;  // sorted by piece_id
  CorpusSummary summary;
  std::string config_fingerprint;
  std::uint64_t seed = 0;
};

/// Score files under `root` (or `root` itself), sorted by path relative to it.
inline std::vector<std::filesystem::path> collect_scores(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (fs::is_regular_file(root, ec)) return {root};
  if (!fs::is_directory(root, ec)) throw IoError("no such file or directory: " + root.string());
  std::vector<fs::path> files;
  for (fs::recursive_directory_iterator it(root, ec), end; it != end && !ec; it.increment(ec))
    if (it->is_regular_file() && it->path().extension() == ".abc") files.push_back(it->path());
  if (ec) throw IoError("cannot list " + root.string() + ": " + ec.message());
  std::sort(files.begin(), files.end(), [&](const fs::path& a, const fs::path& b) {
    return a.lexically_relative(root).generic_string() < b.lexically_relative(root).generic_string();
  });
  return files;
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads.
template <typename F>
void parallel_for(std::size_t n, unsigned jobs, F fn) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  for (unsigned t = 1; t < jobs; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// Evaluates every score; plans are looked up as <plan_dir>/<relative path>.json.
inline CorpusResult evaluate_corpus(const std::filesystem::path& root, const std::optional<std::filesystem::path>& plan_dir,
                                    unsigned jobs, std::uint64_t seed, const EvaluationConfig& config) {
  namespace fs = std::filesystem;
  auto files = collect_scores(root);
  if (files.empty()) throw EmptyCorpus("no .abc files under " + root.string());
  const bool single = fs::is_regular_file(root);
  CorpusResult result;
  result.seed = seed;
  result.config_fingerprint = config_fingerprint(config);
  result.reports.resize(files.size());
  parallel_for(files.size(), jobs, [&](std::size_t i) {
    std::string id = single ? files[i].filename().generic_string() : files[i].lexically_relative(root).generic_string();
    std::optional<fs::path> plan;
    if (plan_dir) {
      if (single && fs::is_regular_file(*plan_dir)) {
        plan = *plan_dir;
      } else {
        fs::path candidate = *plan_dir / fs::path(id).replace_extension(".json");
        if (fs::exists(candidate)) plan = candidate;
      }
    }
    std::string text = read_file(files[i]);
    std::optional<PlanDocument> doc;
    std::optional<std::string> plan_error;
    if (plan) {
      try {
        doc = read_plan(read_file(*plan));
      } catch (const SchemaError& e) {
        plan_error = e.what();
      }
    }
    result.reports[i] = evaluate_text(id, text, doc, config, result.config_fingerprint);
    result.reports[i].plan_error = plan_error;
  });
  result.summary = summarize(result.reports);
  return result;
}

inline nlohmann::json to_json(const CorpusResult& c) {
  nlohmann::json reports = nlohmann::json::array();
  for (const auto& r : c.reports) reports.push_back(to_json(r));
  return {{"schema_version", kReportSchemaVersion},
          {"tool_version", kToolVersion},
          {"config_fingerprint", c.config_fingerprint},
          {"seed", c.seed},
          {"summary", to_json(c.summary)},
          {"reports", std::move(reports)}};
}

inline std::string csv_cell(const std::optional<Rational>& v) { return v ? format_fixed(*v) : ""; }

/// Summary table as CSV: one row per metric, Valid Files first.
inline std::string summary_csv(const CorpusSummary& s) {
  std::ostringstream out;
  out << "# schema_version=" << kReportSchemaVersion << "\n";
  out << "metric,n,mean,min,median,max\n";
  out << "valid_files," << s.n_files << "," << format_fixed(s.valid_pct) << ",,,\n";
  for (const auto& d : s.rows)
    out << d.metric << "," << d.n << "," << csv_cell(d.mean) << "," << csv_cell(d.min) << "," << csv_cell(d.median)
        << "," << csv_cell(d.max) << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Plan extraction over a corpus

struct ExtractedPlan {
  std::string piece_id;
  std::optional<PlanDocument> plan;          // nullopt when the score is invalid
  std::optional<PivotSelection> selection;   // sparse mode only
  std::string skip_reason;
};

inline std::vector<ExtractedPlan> extract_plans(const std::filesystem::path& root, bool sparse, std::uint64_t seed,
                                                const EvaluationConfig& config, unsigned jobs = 1) {
  namespace fs = std::filesystem;
  auto files = collect_scores(root);
  if (files.empty()) throw EmptyCorpus("no .abc files under " + root.string());
  const bool single = fs::is_regular_file(root);
  std::vector<ExtractedPlan> out(files.size());
  parallel_for(files.size(), jobs, [&](std::size_t i) {
    ExtractedPlan& e = out[i];
    e.piece_id = single ? files[i].filename().generic_string() : files[i].lexically_relative(root).generic_string();
    Score score;
    auto validity = abc::validate_abc(read_file(files[i]), &score);
    if (!validity.is_valid) {
      e.skip_reason = validity.issues.empty() ? "invalid" : validity.issues.front().code;
      for (const auto& issue : validity.issues)
        if (issue.severity == abc::Severity::error) {
          e.skip_reason = issue.code;
          break;
        }
      return;
    }
    PlanDocument dense = extract_plan(score, config.instruments, config.density);
    if (sparse) {
      e.selection = select_pivots(dense, seed, config.weight_profiles);
      e.plan = sparse_plan(dense, *e.selection);
    } else {
      e.plan = std::move(dense);
    }
  });
  return out;
}

}  // namespace scorelint
