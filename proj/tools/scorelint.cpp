// scorelint command-line driver: evaluate, extract-plan, validate.

#include "scorelint/scorelint.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace scorelint;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kIo = 2, kEmpty = 3 };

struct CommonOptions {
  std::string config_path;
};

EvaluationConfig load_config(const CommonOptions& opts) {
  EvaluationConfig config;
  std::string path = opts.config_path;
  if (path.empty())
    if (const char* env = std::getenv("SCORELINT_CONFIG")) path = env;
  if (!path.empty()) config = config_from_text(read_file(path), config);
  return config;
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty())
    std::cout << text;
  else
    write_file(out_path, text);
}

int run_evaluate(const std::string& path, const std::string& plan, const std::string& report, const std::string& out,
                 bool jitter_strict, bool per_part, unsigned jobs, std::uint64_t seed, const CommonOptions& common) {
  EvaluationConfig config = load_config(common);
  if (jitter_strict) config.jitter_strict = true;
  if (per_part) config.per_part_structure = true;
  std::optional<fs::path> plan_path;
  if (!plan.empty()) plan_path = plan;
  CorpusResult result = evaluate_corpus(path, plan_path, jobs, seed, config);
  if (report == "csv")
    emit(out, summary_csv(result.summary));
  else
    emit(out, to_json(result).dump(2) + "\n");
  for (const auto& r : result.reports)
    if (r.plan_error) std::cerr << "warning: " << r.piece_id << ": plan ignored: " << *r.plan_error << "\n";
  return result.summary.n_valid == 0 ? kEmpty : kOk;
}

int run_extract(const std::string& path, bool sparse, std::uint64_t seed, const std::string& out, unsigned jobs,
                const CommonOptions& common) {
  EvaluationConfig config = load_config(common);
  const bool single = fs::is_regular_file(path);
  if (!single && out.empty()) {
    std::cerr << "error: extracting from a directory needs --out <dir>\n";
    return kUsage;
  }
  auto plans = extract_plans(path, sparse, seed, config, jobs);
  std::size_t written = 0, skipped = 0;
  for (const auto& e : plans) {
    if (!e.plan) {
      ++skipped;
      std::cerr << "warning: " << e.piece_id << ": skipped (" << e.skip_reason << ")\n";
      continue;
    }
    std::string text = write_plan(*e.plan);
    nlohmann::json pivots;
    if (e.selection) {
      std::vector<double> scores;
      for (const auto& s : e.selection->scores) scores.push_back(rounded_double(s, 4));
      pivots = {{"schema_version", kPlanSchemaVersion},
                {"indices", e.selection->indices},
                {"scores", scores},
                {"weight_profile_id", e.selection->weight_profile_id},
                {"rng_seed", e.selection->rng_seed}};
    }
    if (single) {
      emit(out, text);
      if (e.selection) std::cerr << pivots.dump() << "\n";
    } else {
      fs::path target = fs::path(out) / fs::path(e.piece_id).replace_extension(".json");
      fs::create_directories(target.parent_path());
      write_file(target, text);
      if (e.selection) write_file(fs::path(target).replace_extension(".pivots.json"), pivots.dump(2) + "\n");
    }
    ++written;
  }
  if (!single) std::cerr << written << " plan(s) written, " << skipped << " file(s) skipped\n";
  return written == 0 ? kEmpty : kOk;
}

int run_validate(const std::string& path) {
  auto files = collect_scores(path);
  if (files.empty()) {
    std::cerr << "error: no .abc files under " << path << "\n";
    return kEmpty;
  }
  bool all_valid = true;
  for (const auto& f : files) {
    auto report = abc::validate_abc(read_file(f));
    all_valid = all_valid && report.is_valid;
    std::cout << f.generic_string() << ": " << (report.is_valid ? "valid" : "invalid") << " ("
              << report.error_count() << " errors, " << report.warning_count() << " warnings)\n";
    for (const auto& i : report.issues) {
      std::cout << "  " << abc::to_string(i.severity) << " " << i.code;
      if (!i.part_id.empty()) std::cout << " voice " << i.part_id;
      if (i.measure_index >= 0) std::cout << " measure " << i.measure_index;
      std::cout << ": " << i.message << "\n";
    }
  }
  return all_valid ? kOk : kEmpty;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scorelint: objective quality metrics for interleaved ABC scores"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  CommonOptions common;

  auto* evaluate = app.add_subcommand("evaluate", "evaluate a score file or a directory of scores");
  std::string eval_path, plan_path, report_format = "json", eval_out;
  bool jitter_strict = false, per_part = false;
  unsigned jobs = 1;
  std::uint64_t seed = 0;
  evaluate->add_option("path", eval_path, "score file or directory")->required();
  evaluate->add_option("--plan", plan_path, "plan JSON (file) or plan directory");
  evaluate->add_option("--report", report_format, "report format")->check(CLI::IsMember({"json", "csv"}));
  evaluate->add_option("--out", eval_out, "output file (default: stdout)");
  evaluate->add_flag("--jitter-strict", jitter_strict, "no tuplet exemption in the jitter grid test");
  evaluate->add_flag("--per-part-structure", per_part, "mean of per-part structure scores");
  evaluate->add_option("--config", common.config_path, "config JSON (fallback: $SCORELINT_CONFIG)");
  evaluate->add_option("--jobs", jobs, "worker threads")->check(CLI::Range(1u, 256u));
  evaluate->add_option("--seed", seed, "seed recorded in the report");

  auto* extract = app.add_subcommand("extract-plan", "extract measure-wise plans");
  std::string extract_path, extract_out;
  bool sparse = false;
  std::uint64_t extract_seed = 0;
  unsigned extract_jobs = 1;
  extract->add_option("path", extract_path, "score file or directory")->required();
  extract->add_flag("--sparse", sparse, "keep only pivot measures");
  extract->add_option("--seed", extract_seed, "pivot selection seed");
  extract->add_option("--out", extract_out, "output file, or directory for a corpus");
  extract->add_option("--config", common.config_path, "config JSON (fallback: $SCORELINT_CONFIG)");
  extract->add_option("--jobs", extract_jobs, "worker threads")->check(CLI::Range(1u, 256u));

  auto* validate = app.add_subcommand("validate", "check measure durations and voice declarations");
  std::string validate_path;
  validate->add_option("path", validate_path, "score file or directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*evaluate)
      return run_evaluate(eval_path, plan_path, report_format, eval_out, jitter_strict, per_part, jobs, seed, common);
    if (*extract) return run_extract(extract_path, sparse, extract_seed, extract_out, extract_jobs, common);
    if (*validate) return run_validate(validate_path);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const EmptyCorpus& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kEmpty;
  } catch (const ConfigError& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
