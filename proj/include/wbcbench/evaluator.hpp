#pragma once

// Challenge scoring: submission validation, the 13x13 confusion matrix,
// per-class and macro metrics, ranking and per-class summaries.
//
// Conventions:
//   P_c = TP/(TP+FP), R_c = TP/(TP+FN), S_c = TN/(TN+FP), F1_c = 2PR/(P+R),
//   each 0 when its denominator is 0. Macro values are unweighted means over
//   all 13 classes, whether or not a class occurs in the ground truth.

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "wbcbench/csv.hpp"
#include "wbcbench/error.hpp"
#include "wbcbench/manifest.hpp"
#include "wbcbench/taxonomy.hpp"

namespace wbcbench {

struct PredictionSet {
  std::map<std::string, ClassLabel> entries;
  std::string team;
  std::optional<std::string> timestamp;
};

enum class DiagnosticKind { BadHeader, MalformedRow, InvalidLabel, DuplicateId, UnknownId, MissingId };

inline constexpr std::array<std::string_view, 6> kDiagnosticNames{"bad_header",   "malformed_row", "invalid_label",
                                                                  "duplicate_id", "unknown_id",    "missing_id"};

inline std::string_view to_string(DiagnosticKind k) noexcept { return kDiagnosticNames[static_cast<std::size_t>(k)]; }

struct SubmissionDiagnostic {
  DiagnosticKind kind;
  std::size_t line = 0;  // 0 when the problem has no line (missing ids)
  std::string image_id;
  std::string message;
};

/// Carries every problem found in a submission, not just the first.
class SubmissionError : public ValidationError {
 public:
  explicit SubmissionError(std::vector<SubmissionDiagnostic> diagnostics)
      : ValidationError(summarise(diagnostics)), diagnostics_(std::move(diagnostics)) {}

  [[nodiscard]] const std::vector<SubmissionDiagnostic>& diagnostics() const noexcept { return diagnostics_; }

  [[nodiscard]] std::size_t count(DiagnosticKind kind) const noexcept {
    return static_cast<std::size_t>(std::count_if(diagnostics_.begin(), diagnostics_.end(),
                                                  [&](const auto& d) { return d.kind == kind; }));
  }

 private:
  static std::string summarise(const std::vector<SubmissionDiagnostic>& ds) {
    std::string out = "invalid submission (" + std::to_string(ds.size()) + " problem(s))";
    for (const auto& d : ds) {
      out += "\n  ";
      if (d.line) out += "line " + std::to_string(d.line) + ": ";
      out += d.message;
    }
    return out;
  }

  std::vector<SubmissionDiagnostic> diagnostics_;
};

/// Fail-closed: exactly one valid prediction per ground-truth image.
inline PredictionSet validate_submission(std::istream& in, const Manifest& truth, std::string team = {}) {
  std::vector<SubmissionDiagnostic> diags;
  const auto rows = csv::read_rows(in);
  PredictionSet pred;
  pred.team = std::move(team);
  if (rows.empty() || rows.front().fields != std::vector<std::string>{"image_id", "label"}) {
    diags.push_back({DiagnosticKind::BadHeader, rows.empty() ? 1 : rows.front().line, {}, "header must be image_id,label"});
    throw SubmissionError(std::move(diags));
  }
  std::unordered_map<std::string, std::size_t> truth_ids;
  truth_ids.reserve(truth.size());
  for (std::size_t i = 0; i < truth.records.size(); ++i) truth_ids.emplace(truth.records[i].image_id, i);
  std::unordered_map<std::string, std::size_t> first_line;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const auto& row = rows[k];
    if (row.fields.size() != 2 || row.fields[0].empty()) {
      diags.push_back({DiagnosticKind::MalformedRow, row.line, {},
                       "malformed row: expected 2 fields, got " + std::to_string(row.fields.size())});
      continue;
    }
    const auto& id = row.fields[0];
    auto [it, fresh] = first_line.emplace(id, row.line);
    if (!fresh) {
      diags.push_back({DiagnosticKind::DuplicateId, row.line, id,
                       "duplicate image_id '" + id + "' (first on line " + std::to_string(it->second) + ")"});
      continue;
    }
    if (!truth_ids.contains(id)) {
      diags.push_back({DiagnosticKind::UnknownId, row.line, id, "unknown image_id '" + id + "'"});
      continue;
    }
    const auto label = parse_class_label(row.fields[1]);
    if (!label) {
      diags.push_back({DiagnosticKind::InvalidLabel, row.line, id, "invalid label '" + row.fields[1] + "'"});
      continue;
    }
    pred.entries.emplace(id, *label);
  }
  for (const auto& r : truth.records) {
    if (!first_line.contains(r.image_id)) {
      diags.push_back({DiagnosticKind::MissingId, 0, r.image_id, "missing prediction for '" + r.image_id + "'"});
    }
  }
  if (!diags.empty()) throw SubmissionError(std::move(diags));
  return pred;
}

inline PredictionSet validate_submission(const std::filesystem::path& path, const Manifest& truth, std::string team = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open submission '" + path.string() + "'");
  return validate_submission(in, truth, std::move(team));
}

/// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  std::array<std::array<std::int64_t, kNumClasses>, kNumClasses> counts{};

  [[nodiscard]] std::int64_t total() const noexcept {
    std::int64_t t = 0;
    for (const auto& row : counts) {
      for (auto v : row) t += v;
    }
    return t;
  }
};

struct ClassMetrics {
  std::int64_t support = 0;
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double specificity = 0.0;
};

/// Ranking key, compared lexicographically, larger is better.
struct RankingTuple {
  double macro_f1 = 0.0;
  double balanced_accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_specificity = 0.0;

  [[nodiscard]] auto as_tuple() const noexcept {
    return std::tie(macro_f1, balanced_accuracy, macro_precision, macro_specificity);
  }
  bool operator==(const RankingTuple&) const = default;
};

enum class BalancedAccuracyMode {
  /// Zero-support classes contribute recall 0 and still count in the 1/13.
  IncludeZeroSupport,
  /// Mean recall over classes present in the ground truth only.
  SupportedOnly,
};

struct EvalReport {
  std::string team;
  ConfusionMatrix confusion;
  std::array<ClassMetrics, kNumClasses> per_class{};
  double macro_f1 = 0.0;
  double balanced_accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_specificity = 0.0;
  std::vector<std::string> warnings;

  [[nodiscard]] RankingTuple ranking_tuple() const noexcept {
    return {macro_f1, balanced_accuracy, macro_precision, macro_specificity};
  }
};

namespace detail {

inline double ratio(std::int64_t num, std::int64_t den) noexcept {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace detail

inline EvalReport score_confusion(const ConfusionMatrix& cm,
                                  BalancedAccuracyMode mode = BalancedAccuracyMode::IncludeZeroSupport) {
  EvalReport rep;
  rep.confusion = cm;
  const std::int64_t total = cm.total();
  double sum_f1 = 0.0, sum_p = 0.0, sum_s = 0.0, sum_r = 0.0;
  std::size_t supported = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    auto& m = rep.per_class[c];
    std::int64_t predicted = 0;
    for (std::size_t t = 0; t < kNumClasses; ++t) {
      m.support += cm.counts[c][t];
      predicted += cm.counts[t][c];
    }
    m.tp = cm.counts[c][c];
    m.fp = predicted - m.tp;
    m.fn = m.support - m.tp;
    m.tn = total - m.tp - m.fp - m.fn;
    m.precision = detail::ratio(m.tp, m.tp + m.fp);
    m.recall = detail::ratio(m.tp, m.tp + m.fn);
    m.specificity = detail::ratio(m.tn, m.tn + m.fp);
    const double pr = m.precision + m.recall;
    m.f1 = pr > 0.0 ? 2.0 * m.precision * m.recall / pr : 0.0;
    sum_f1 += m.f1;
    sum_p += m.precision;
    sum_s += m.specificity;
    if (m.support > 0) {
      sum_r += m.recall;
      ++supported;
    } else {
      rep.warnings.push_back("class " + std::string(kClassCodes[c]) + " has zero support in the ground truth");
    }
  }
  const double n = static_cast<double>(kNumClasses);
  rep.macro_f1 = sum_f1 / n;
  rep.macro_precision = sum_p / n;
  rep.macro_specificity = sum_s / n;
  if (mode == BalancedAccuracyMode::IncludeZeroSupport) {
    rep.balanced_accuracy = sum_r / n;
  } else {
    rep.balanced_accuracy = supported ? sum_r / static_cast<double>(supported) : 0.0;
  }
  return rep;
}

inline ConfusionMatrix confusion_matrix(const PredictionSet& pred, const Manifest& truth) {
  ConfusionMatrix cm;
  for (const auto& r : truth.records) {
    auto it = pred.entries.find(r.image_id);
    if (it == pred.entries.end()) throw ValidationError("no prediction for '" + r.image_id + "'");
    ++cm.counts[index_of(r.label)][index_of(it->second)];
  }
  return cm;
}

inline EvalReport score(const PredictionSet& pred, const Manifest& truth,
                        BalancedAccuracyMode mode = BalancedAccuracyMode::IncludeZeroSupport) {
  if (pred.entries.size() != truth.size()) throw ValidationError("prediction set does not match ground truth size");
  EvalReport rep = score_confusion(confusion_matrix(pred, truth), mode);
  rep.team = pred.team;
  return rep;
}

struct TeamScore {
  std::string team;
  RankingTuple tuple;
};

struct LeaderboardRow {
  std::size_t rank = 0;
  std::string team;
  RankingTuple tuple;
};

/// Descending on (macro F1, balanced accuracy, macro precision, macro
/// specificity); exact residual ties go to the alphabetically first team.
inline std::vector<LeaderboardRow> rank(std::span<const TeamScore> scores) {
  std::vector<TeamScore> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(), [](const TeamScore& a, const TeamScore& b) {
    if (a.tuple.as_tuple() != b.tuple.as_tuple()) return a.tuple.as_tuple() > b.tuple.as_tuple();
    return a.team < b.team;
  });
  std::vector<LeaderboardRow> rows;
  rows.reserve(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) rows.push_back({i + 1, sorted[i].team, sorted[i].tuple});
  return rows;
}

inline std::vector<LeaderboardRow> rank(std::span<const EvalReport> reports) {
  std::vector<TeamScore> scores;
  for (const auto& r : reports) scores.push_back({r.team, r.ranking_tuple()});
  return rank(std::span<const TeamScore>(scores));
}

struct PerClassSummaryRow {
  ClassLabel label = ClassLabel::SNE;
  std::int64_t support = 0;
  double mean_f1 = 0.0;
  double min_f1 = 0.0;
  double max_f1 = 0.0;
};

/// Mean/min/max F1 per class across reports, easiest class (highest mean) first.
inline std::vector<PerClassSummaryRow> per_class_summary(std::span<const EvalReport> reports) {
  if (reports.empty()) throw ValidationError("per-class summary needs at least one report");
  std::vector<PerClassSummaryRow> rows;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    PerClassSummaryRow row;
    row.label = kAllClasses[c];
    row.support = reports.front().per_class[c].support;
    row.min_f1 = reports.front().per_class[c].f1;
    row.max_f1 = row.min_f1;
    double sum = 0.0;
    for (const auto& r : reports) {
      const double f = r.per_class[c].f1;
      sum += f;
      row.min_f1 = std::min(row.min_f1, f);
      row.max_f1 = std::max(row.max_f1, f);
    }
    row.mean_f1 = sum / static_cast<double>(reports.size());
    rows.push_back(row);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.mean_f1 > b.mean_f1; });
  return rows;
}

inline nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["team"] = r.team;
  j["images"] = r.confusion.total();
  nlohmann::ordered_json macro;
  macro["macro_f1"] = r.macro_f1;
  macro["balanced_accuracy"] = r.balanced_accuracy;
  macro["macro_precision"] = r.macro_precision;
  macro["macro_specificity"] = r.macro_specificity;
  j["macro"] = macro;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto& m = r.per_class[c];
    nlohmann::ordered_json row;
    row["support"] = m.support;
    row["tp"] = m.tp;
    row["fp"] = m.fp;
    row["fn"] = m.fn;
    row["tn"] = m.tn;
    row["precision"] = m.precision;
    row["recall"] = m.recall;
    row["f1"] = m.f1;
    row["specificity"] = m.specificity;
    j["per_class"][std::string(kClassCodes[c])] = row;
  }
  j["confusion"] = nlohmann::ordered_json::array();
  for (const auto& row : r.confusion.counts) j["confusion"].push_back(row);
  j["warnings"] = r.warnings;
  return j;
}

/// Reads back a report written by to_json; metrics are taken as stored.
inline EvalReport report_from_json(const nlohmann::json& j) {
  try {
    EvalReport r;
    r.team = j.at("team").get<std::string>();
    const auto& macro = j.at("macro");
    r.macro_f1 = macro.at("macro_f1").get<double>();
    r.balanced_accuracy = macro.at("balanced_accuracy").get<double>();
    r.macro_precision = macro.at("macro_precision").get<double>();
    r.macro_specificity = macro.at("macro_specificity").get<double>();
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      const auto& row = j.at("per_class").at(std::string(kClassCodes[c]));
      auto& m = r.per_class[c];
      m.support = row.at("support").get<std::int64_t>();
      m.tp = row.value("tp", std::int64_t{0});
      m.fp = row.value("fp", std::int64_t{0});
      m.fn = row.value("fn", std::int64_t{0});
      m.tn = row.value("tn", std::int64_t{0});
      m.precision = row.at("precision").get<double>();
      m.recall = row.at("recall").get<double>();
      m.f1 = row.at("f1").get<double>();
      m.specificity = row.at("specificity").get<double>();
    }
    if (j.contains("confusion")) {
      for (std::size_t t = 0; t < kNumClasses; ++t) {
        for (std::size_t p = 0; p < kNumClasses; ++p) r.confusion.counts[t][p] = j.at("confusion").at(t).at(p).get<std::int64_t>();
      }
    }
    if (j.contains("warnings")) r.warnings = j.at("warnings").get<std::vector<std::string>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed report: ") + e.what());
  }
}

inline std::string format_fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

inline std::string format_leaderboard_csv(std::span<const LeaderboardRow> rows) {
  std::string out = "rank,team,macro_f1,balanced_accuracy,macro_precision,macro_specificity\n";
  for (const auto& r : rows) {
    out += std::to_string(r.rank) + ',' + r.team + ',' + format_fixed3(r.tuple.macro_f1) + ',' +
           format_fixed3(r.tuple.balanced_accuracy) + ',' + format_fixed3(r.tuple.macro_precision) + ',' +
           format_fixed3(r.tuple.macro_specificity) + '\n';
  }
  return out;
}

inline std::string format_per_class_csv(std::span<const PerClassSummaryRow> rows) {
  std::string out = "class,support,avg_f1,min_f1,max_f1\n";
  for (const auto& r : rows) {
    out += std::string(to_string(r.label)) + ',' + std::to_string(r.support) + ',' + format_fixed3(r.mean_f1) + ',' +
           format_fixed3(r.min_f1) + ',' + format_fixed3(r.max_f1) + '\n';
  }
  return out;
}

}  // namespace wbcbench
