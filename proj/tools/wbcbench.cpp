// wbcbench: command-line driver for the benchmark pipeline.
//
//   synth → split → assign → degrade → evaluate → leaderboard
//
// Exit codes: 0 success, 1 validation error, 2 I/O error.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "wbcbench/wbcbench.hpp"

namespace fs = std::filesystem;
using namespace wbcbench;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

struct Common {
  std::string config_path;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* workers_opt = nullptr;
};

unsigned default_workers() {
  if (const char* env = std::getenv("WBCBENCH_WORKERS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
  }
  return 1;
}

/// Defaults, then the config file, then explicit flags.
PipelineConfig resolve_config(const Common& common) {
  PipelineConfig cfg;
  cfg.workers = default_workers();
  if (!common.config_path.empty()) cfg = load_pipeline_config(common.config_path, cfg);
  if (common.seed_opt && common.seed_opt->count()) cfg.seed = common.seed;
  if (common.workers_opt && common.workers_opt->count()) cfg.workers = std::max(1u, common.workers);
  return cfg;
}

void log_run(const std::string& command, const PipelineConfig& cfg) {
  std::cerr << "wbcbench " << command << ": seed=" << cfg.seed << " config_hash=" << config_hash(cfg) << '\n';
}

std::vector<double> parse_doubles(const std::string& text, std::size_t expected, const std::string& flag) {
  std::vector<double> out;
  for (const auto& item : csv::split_fields(text)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ValidationError(flag + ": '" + item + "' is not a number");
    }
  }
  if (out.size() != expected) throw ValidationError(flag + ": expected " + std::to_string(expected) + " comma-separated values");
  return out;
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) { csv::write_text(path, j.dump(2) + "\n"); }

void add_common(CLI::App* cmd, Common& common, bool with_workers) {
  cmd->add_option("--config", common.config_path, "JSON config file (flags override it)");
  common.seed_opt = cmd->add_option("--seed", common.seed, "Global seed");
  if (with_workers) common.workers_opt = cmd->add_option("--workers", common.workers, "Worker threads (env WBCBENCH_WORKERS)");
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string out;
  int patients = 40;
  std::int64_t images = 800;
  std::string mixture;
  int side = kDefaultImageSide;
  bool manifest_only = false;
};

int cmd_synth(const SynthArgs& a, const Common& common) {
  const auto cfg = resolve_config(common);
  log_run("synth", cfg);
  SynthOptions opt;
  opt.patients = a.patients;
  opt.images = a.images;
  if (!a.mixture.empty()) opt.mixture = parse_mixture(a.mixture);
  opt.seed = cfg.seed;
  opt.side = a.side;
  const auto m = write_synth_dataset(opt, a.out, !a.manifest_only);
  std::cerr << "wrote " << m.size() << " records for " << profiles_from_manifest(m).size() << " patients to " << a.out << '\n';
  return 0;
}

struct SplitArgs {
  std::string patients_csv;
  std::string manifest;
  std::string fractions;
  double rarity_exponent = 1.0;
  int restarts = 64;
  CLI::Option* rarity_opt = nullptr;
  CLI::Option* restarts_opt = nullptr;
  std::string out;
  std::string stats;
  std::string tagged_manifest;
};

int cmd_split(const SplitArgs& a, const Common& common) {
  auto cfg = resolve_config(common);
  if (!a.fractions.empty()) {
    const auto f = parse_doubles(a.fractions, kNumSplits, "--fractions");
    std::copy(f.begin(), f.end(), cfg.split.patient_fraction.begin());
  }
  if (a.rarity_opt->count()) cfg.split.rarity_exponent = a.rarity_exponent;
  if (a.restarts_opt->count()) cfg.split.restarts = a.restarts;
  log_run("split", cfg);
  if (a.patients_csv.empty() == a.manifest.empty()) throw ValidationError("give exactly one of --patients-csv or --manifest");
  std::optional<Manifest> manifest;
  std::vector<PatientProfile> patients;
  if (!a.manifest.empty()) {
    manifest = parse_manifest(a.manifest);
    patients = profiles_from_manifest(*manifest);
  } else {
    patients = parse_patients_csv(a.patients_csv);
  }
  const auto plan = plan_split(patients, cfg.split, cfg.seed, cfg.workers);
  csv::write_text(a.out, format_plan_csv(plan));
  if (!a.stats.empty()) write_json(a.stats, plan_stats_json(plan));
  if (!a.tagged_manifest.empty()) {
    if (!manifest) throw ValidationError("--tagged-manifest requires --manifest");
    const auto tagged = tag_with_splits(*manifest, plan);
    if (!check_disjointness(plan, tagged).ok()) throw ValidationError("internal error: tagged manifest violates patient disjointness");
    write_manifest(tagged, a.tagged_manifest);
  }
  for (const auto& w : plan.warnings) std::cerr << "warning: " << w << '\n';
  std::cerr << "split sizes (patients):";
  for (std::size_t s = 0; s < kNumSplits; ++s) std::cerr << ' ' << kSplitTokens[s] << '=' << plan.patients_per_split[s];
  std::cerr << " objective=" << plan.objective_score << '\n';
  return 0;
}

struct AssignArgs {
  std::string manifest;
  std::string out;
  std::string report;
  std::array<std::string, kNumSplits> fractions;
  double coverage_threshold = 0.005;
  CLI::Option* coverage_opt = nullptr;
};

int cmd_assign(const AssignArgs& a, const Common& common) {
  auto cfg = resolve_config(common);
  for (std::size_t s = 0; s < kNumSplits; ++s) {
    if (a.fractions[s].empty()) continue;
    const auto f = parse_doubles(a.fractions[s], kNumSeverities, "--fractions-" + std::string(kSplitTokens[s]));
    std::copy(f.begin(), f.end(), cfg.severity[s].p.begin());
  }
  if (a.coverage_opt->count()) cfg.protection.coverage_threshold = a.coverage_threshold;
  log_run("assign", cfg);
  const auto m = parse_manifest(a.manifest);
  const auto result = assign_all_splits(m, cfg.severity, cfg.protection, cfg.seed);
  nlohmann::ordered_json report;
  report["seed"] = cfg.seed;
  for (SplitName split : kAllSplits) {
    const auto& plan = result.by_split[index_of(split)];
    if (!plan) continue;
    report["splits"][std::string(to_string(split))] = severity_report_json(*plan, severity_histogram(*plan, m.restrict_to(split)));
  }
  write_manifest(result.tagged, a.out);
  if (!a.report.empty()) write_json(a.report, report);
  return 0;
}

struct DegradeArgs {
  std::string manifest;
  std::string images;
  std::string out;
  std::string log;
  std::string out_manifest;
};

int cmd_degrade(const DegradeArgs& a, const Common& common) {
  const auto cfg = resolve_config(common);
  log_run("degrade", cfg);
  const auto m = parse_manifest(a.manifest);
  BatchOptions opt{a.images, a.out, cfg.degradation, cfg.seed, cfg.workers};
  const auto result = degrade_batch(m, opt);
  const fs::path log = a.log.empty() ? fs::path(a.out) / "recipes.jsonl" : fs::path(a.log);
  csv::write_text(log, format_recipe_log(result));
  if (!a.out_manifest.empty()) {
    Manifest seeded = m;
    for (auto& r : seeded.records) r.seed = image_seed(cfg.seed, r.image_id);
    write_manifest(seeded, a.out_manifest);
  }
  for (const auto& e : result.entries) {
    if (e.error) std::cerr << "error: " << e.recipe.image_id << ": " << *e.error << '\n';
  }
  if (!result.ok()) throw IoError(std::to_string(result.failures()) + " image(s) failed; see " + log.string());
  std::cerr << "degraded " << result.entries.size() << " image(s); recipe log " << log.string() << '\n';
  return 0;
}

struct EvaluateArgs {
  std::string truth;
  std::string pred;
  std::string team;
  std::string out;
  std::string split;
  std::string ba_mode = "include-zero";
};

int cmd_evaluate(const EvaluateArgs& a, const Common& common) {
  const auto cfg = resolve_config(common);
  log_run("evaluate", cfg);
  auto truth = parse_manifest(a.truth);
  if (!a.split.empty()) {
    if (!truth.has_split()) throw ValidationError("--split given but truth manifest has no split column");
    truth = truth.restrict_to(require_split(a.split));
  }
  BalancedAccuracyMode mode = BalancedAccuracyMode::IncludeZeroSupport;
  if (a.ba_mode == "supported-only") mode = BalancedAccuracyMode::SupportedOnly;
  else if (a.ba_mode != "include-zero") throw ValidationError("--balanced-accuracy must be include-zero or supported-only");
  const std::string team = a.team.empty() ? fs::path(a.pred).stem().string() : a.team;
  const auto pred = validate_submission(fs::path(a.pred), truth, team);
  const auto report = score(pred, truth, mode);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  const auto j = to_json(report);
  if (a.out.empty()) std::cout << j.dump(2) << '\n';
  else write_json(a.out, j);
  std::cerr << "macro_f1=" << report.macro_f1 << " balanced_accuracy=" << report.balanced_accuracy << '\n';
  return 0;
}

struct LeaderboardArgs {
  std::vector<std::string> reports;
  std::string out;
  std::string per_class;
  std::size_t top = 10;
};

int cmd_leaderboard(const LeaderboardArgs& a, const Common& common) {
  const auto cfg = resolve_config(common);
  log_run("leaderboard", cfg);
  std::vector<EvalReport> reports;
  for (const auto& path : a.reports) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open report '" + path + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("report '" + path + "' is not valid JSON: " + e.what());
    }
    reports.push_back(report_from_json(j));
  }
  if (reports.empty()) throw ValidationError("no reports given");
  const auto rows = rank(std::span<const EvalReport>(reports));
  const auto text = format_leaderboard_csv(rows);
  if (a.out.empty()) std::cout << text;
  else csv::write_text(a.out, text);
  if (!a.per_class.empty()) {
    std::vector<EvalReport> top;
    for (const auto& row : rows) {
      if (top.size() >= a.top) break;
      for (const auto& r : reports) {
        if (r.team == row.team) {
          top.push_back(r);
          break;
        }
      }
    }
    csv::write_text(a.per_class, format_per_class_csv(per_class_summary(std::span<const EvalReport>(top))));
  }
  return 0;
}

int cmd_config(const std::string& out, const Common& common) {
  const auto cfg = resolve_config(common);
  const auto text = to_json(cfg).dump(2) + "\n";
  if (out.empty()) std::cout << text;
  else csv::write_text(out, text);
  return 0;
}

int report_error(const std::exception& e, int code, bool json) {
  if (!json) {
    std::cerr << "error: " << e.what() << '\n';
    return code;
  }
  nlohmann::ordered_json j;
  j["error"]["kind"] = code == kExitIo ? "io" : "validation";
  j["error"]["exit_code"] = code;
  j["error"]["message"] = e.what();
  if (const auto* sub = dynamic_cast<const SubmissionError*>(&e)) {
    j["error"]["diagnostics"] = nlohmann::ordered_json::array();
    for (const auto& d : sub->diagnostics()) {
      j["error"]["diagnostics"].push_back(
          {{"kind", std::string(to_string(d.kind))}, {"line", d.line}, {"image_id", d.image_id}, {"message", d.message}});
    }
  }
  std::cerr << j.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Benchmark pipeline: patient-level splitting, severity assignment, image degradation, scoring"};
  app.require_subcommand(1);
  bool json_errors = false;
  app.add_flag("--json", json_errors, "Emit errors as JSON on stderr");
  Common synth_common, split_common, assign_common, degrade_common, eval_common, board_common, config_common;

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic (non-biological) dataset");
  c_synth->add_option("--out", synth.out, "Output directory")->required();
  c_synth->add_option("--patients", synth.patients, "Number of patients (>= 4)");
  c_synth->add_option("--images", synth.images, "Number of images");
  c_synth->add_option("--mixture", synth.mixture, "Class weights, e.g. SNE=8188,LY=4269 (default: long-tailed test supports)");
  c_synth->add_option("--side", synth.side, "Patch side in pixels");
  c_synth->add_flag("--manifest-only", synth.manifest_only, "Skip image rendering");
  add_common(c_synth, synth_common, false);

  SplitArgs split;
  auto* c_split = app.add_subcommand("split", "Patient-level group-stratified split");
  c_split->add_option("--patients-csv", split.patients_csv, "Roster CSV: patient_id,label,count");
  c_split->add_option("--manifest", split.manifest, "Manifest CSV to aggregate patients from");
  c_split->add_option("--fractions", split.fractions, "Patient fractions phase1_train,phase2_train,phase2_eval,phase2_test");
  split.rarity_opt = c_split->add_option("--rarity-exponent", split.rarity_exponent, "Class weight exponent");
  split.restarts_opt = c_split->add_option("--restarts", split.restarts, "Greedy restarts");
  c_split->add_option("--out", split.out, "Plan CSV (patient_id,split)")->required();
  c_split->add_option("--stats", split.stats, "JSON statistics output");
  c_split->add_option("--tagged-manifest", split.tagged_manifest, "Write the manifest with a split column");
  add_common(c_split, split_common, true);

  AssignArgs assign;
  auto* c_assign = app.add_subcommand("assign", "Assign severities per split");
  c_assign->add_option("--manifest", assign.manifest, "Manifest with split column")->required();
  c_assign->add_option("--out", assign.out, "Output manifest with severity column")->required();
  c_assign->add_option("--report", assign.report, "JSON quota report");
  for (std::size_t s = 0; s < kNumSplits; ++s) {
    c_assign->add_option("--fractions-" + std::string(kSplitTokens[s]), assign.fractions[s],
                         "pristine,mild,moderate,extreme for " + std::string(kSplitTokens[s]));
  }
  assign.coverage_opt = c_assign->add_option("--coverage-threshold", assign.coverage_threshold, "Rare-class protection threshold");
  add_common(c_assign, assign_common, false);

  DegradeArgs degrade;
  auto* c_degrade = app.add_subcommand("degrade", "Apply seeded degradation recipes");
  c_degrade->add_option("--manifest", degrade.manifest, "Manifest with severity column")->required();
  c_degrade->add_option("--images", degrade.images, "Input image directory")->required();
  c_degrade->add_option("--out", degrade.out, "Output image directory")->required();
  c_degrade->add_option("--log", degrade.log, "Recipe log (JSON lines; default <out>/recipes.jsonl)");
  c_degrade->add_option("--out-manifest", degrade.out_manifest, "Write the manifest with per-image seeds");
  add_common(c_degrade, degrade_common, true);

  EvaluateArgs evaluate;
  auto* c_eval = app.add_subcommand("evaluate", "Score a submission");
  c_eval->add_option("--truth", evaluate.truth, "Ground-truth manifest")->required();
  c_eval->add_option("--pred", evaluate.pred, "Submission CSV (image_id,label)")->required();
  c_eval->add_option("--team", evaluate.team, "Team name (default: submission file stem)");
  c_eval->add_option("--split", evaluate.split, "Restrict truth to one split");
  c_eval->add_option("--out", evaluate.out, "Report JSON (default: stdout)");
  c_eval->add_option("--balanced-accuracy", evaluate.ba_mode, "include-zero | supported-only");
  add_common(c_eval, eval_common, false);

  LeaderboardArgs board;
  auto* c_board = app.add_subcommand("leaderboard", "Rank evaluation reports");
  c_board->add_option("reports", board.reports, "Report JSON files")->required();
  c_board->add_option("--out", board.out, "Leaderboard CSV (default: stdout)");
  c_board->add_option("--per-class", board.per_class, "Per-class F1 summary CSV over the top teams");
  c_board->add_option("--top", board.top, "Teams included in the per-class summary");
  add_common(c_board, board_common, false);

  std::string config_out;
  auto* c_config = app.add_subcommand("config", "Print the effective configuration");
  c_config->add_option("--out", config_out, "Write to file instead of stdout");
  add_common(c_config, config_common, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*c_synth) return cmd_synth(synth, synth_common);
    if (*c_split) return cmd_split(split, split_common);
    if (*c_assign) return cmd_assign(assign, assign_common);
    if (*c_degrade) return cmd_degrade(degrade, degrade_common);
    if (*c_eval) return cmd_evaluate(evaluate, eval_common);
    if (*c_board) return cmd_leaderboard(board, board_common);
    if (*c_config) return cmd_config(config_out, config_common);
  } catch (const Error& e) {
    return report_error(e, e.kind() == ErrorKind::Io ? kExitIo : kExitValidation, json_errors);
  } catch (const std::filesystem::filesystem_error& e) {
    return report_error(e, kExitIo, json_errors);
  } catch (const std::exception& e) {
    return report_error(e, kExitValidation, json_errors);
  }
  return kExitValidation;
}
