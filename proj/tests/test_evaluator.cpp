#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <numeric>
#include <sstream>

#include "oracles.hpp"
#include "wbcbench/evaluator.hpp"
#include "wbcbench/random.hpp"

using namespace wbcbench;

namespace {

Manifest truth_of(const std::vector<int>& labels) {
  Manifest m;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    m.records.push_back(make_record("i" + std::to_string(i), "P" + std::to_string(i % 7), kAllClasses[static_cast<std::size_t>(labels[i])]));
  }
  return m;
}

PredictionSet pred_of(const std::vector<int>& labels, std::string team = "t") {
  PredictionSet p;
  p.team = std::move(team);
  for (std::size_t i = 0; i < labels.size(); ++i) p.entries.emplace("i" + std::to_string(i), kAllClasses[static_cast<std::size_t>(labels[i])]);
  return p;
}

std::vector<int> random_labels(Stream& rng, std::size_t n, int skew) {
  std::vector<int> out(n);
  for (auto& v : out) {
    // skew > 0 concentrates mass on the low codes so some classes go unsupported
    const auto a = static_cast<int>(rng.below(13));
    v = skew ? std::min(a, static_cast<int>(rng.below(13))) : a;
  }
  return out;
}

EvalReport synthetic_report(std::string team, RankingTuple t) {
  EvalReport r;
  r.team = std::move(team);
  r.macro_f1 = t.macro_f1;
  r.balanced_accuracy = t.balanced_accuracy;
  r.macro_precision = t.macro_precision;
  r.macro_specificity = t.macro_specificity;
  return r;
}

}  // namespace

TEST(Evaluator, PerfectPredictionsScoreOne) {
  std::vector<int> labels;
  for (int c = 0; c < 13; ++c) labels.insert(labels.end(), static_cast<std::size_t>(c + 1), c);
  const auto rep = score(pred_of(labels), truth_of(labels));
  EXPECT_EQ(rep.macro_f1, 1.0);
  EXPECT_EQ(rep.balanced_accuracy, 1.0);
  EXPECT_EQ(rep.macro_precision, 1.0);
  EXPECT_EQ(rep.macro_specificity, 1.0);
  EXPECT_TRUE(rep.warnings.empty());
}

TEST(Evaluator, AllMajorityPredictor) {
  std::vector<int> truth;
  for (int c = 0; c < 13; ++c) truth.insert(truth.end(), c == 4 ? 50u : 5u, c);
  const std::vector<int> pred(truth.size(), 4);
  const auto rep = score(pred_of(pred), truth_of(truth));
  const double p = 50.0 / static_cast<double>(truth.size());
  const double f1 = 2.0 * p * 1.0 / (p + 1.0);
  EXPECT_EQ(rep.per_class[4].f1, f1);
  EXPECT_EQ(rep.macro_f1, f1 / 13.0);
  EXPECT_EQ(rep.balanced_accuracy, 1.0 / 13.0);
}

TEST(Evaluator, MatchesBruteForceOracle) {
  Stream rng(500);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = trial == 0 ? 500 : 1 + rng.below(600);
    const auto truth = random_labels(rng, n, trial % 3);
    auto pred = truth;
    for (auto& v : pred) {
      if (rng.bernoulli(0.4)) v = static_cast<int>(rng.below(13));
    }
    const auto rep = score(pred_of(pred), truth_of(truth));
    const auto o = oracle::brute_force_scores(truth, pred);
    for (std::size_t c = 0; c < 13; ++c) {
      ASSERT_NEAR(rep.per_class[c].precision, o.per_class[c].precision, 1e-12);
      ASSERT_NEAR(rep.per_class[c].recall, o.per_class[c].recall, 1e-12);
      ASSERT_NEAR(rep.per_class[c].f1, o.per_class[c].f1, 1e-12);
      ASSERT_NEAR(rep.per_class[c].specificity, o.per_class[c].specificity, 1e-12);
    }
    ASSERT_NEAR(rep.macro_f1, o.macro_f1, 1e-12);
    ASSERT_NEAR(rep.balanced_accuracy, o.balanced_accuracy, 1e-12);
    ASSERT_NEAR(rep.macro_precision, o.macro_precision, 1e-12);
    ASSERT_NEAR(rep.macro_specificity, o.macro_specificity, 1e-12);
  }
}

TEST(Evaluator, ZeroSupportClassesAndModes) {
  const std::vector<int> truth{0, 0, 1, 1, 2};
  const std::vector<int> pred{0, 1, 1, 1, 2};
  const auto inc = score(pred_of(pred), truth_of(truth));
  const auto sup = score(pred_of(pred), truth_of(truth), BalancedAccuracyMode::SupportedOnly);
  EXPECT_NEAR(inc.balanced_accuracy, 2.5 / 13.0, 1e-15);
  EXPECT_NEAR(sup.balanced_accuracy, 2.5 / 3.0, 1e-15);
  EXPECT_EQ(inc.macro_f1, sup.macro_f1);
  EXPECT_EQ(inc.warnings.size(), 10u);
  EXPECT_EQ(inc.per_class[5].precision, 0.0);
  EXPECT_EQ(inc.per_class[5].specificity, 1.0);
}

TEST(Evaluator, RelabellingClassesPermutesPerClassMetrics) {
  Stream rng(3);
  const auto truth = random_labels(rng, 300, 0);
  auto pred = truth;
  for (auto& v : pred) {
    if (rng.bernoulli(0.3)) v = static_cast<int>(rng.below(13));
  }
  std::vector<int> perm(13);
  std::iota(perm.begin(), perm.end(), 0);
  shuffle(perm, rng);
  auto relabel = [&](std::vector<int> v) {
    for (auto& x : v) x = perm[static_cast<std::size_t>(x)];
    return v;
  };
  const auto a = score(pred_of(pred), truth_of(truth));
  const auto b = score(pred_of(relabel(pred)), truth_of(relabel(truth)));
  for (std::size_t c = 0; c < 13; ++c) EXPECT_EQ(a.per_class[c].f1, b.per_class[static_cast<std::size_t>(perm[c])].f1);
  EXPECT_NEAR(a.macro_f1, b.macro_f1, 1e-12);
  EXPECT_NEAR(a.balanced_accuracy, b.balanced_accuracy, 1e-12);
}

TEST(Evaluator, DuplicatingEveryImageKeepsRatios) {
  Stream rng(8);
  const auto truth = random_labels(rng, 200, 1);
  auto pred = truth;
  for (auto& v : pred) {
    if (rng.bernoulli(0.3)) v = static_cast<int>(rng.below(13));
  }
  auto twice = [](std::vector<int> v) {
    const auto n = v.size();
    for (std::size_t i = 0; i < n; ++i) v.push_back(v[i]);
    return v;
  };
  const auto a = score(pred_of(pred), truth_of(truth));
  const auto b = score(pred_of(twice(pred)), truth_of(twice(truth)));
  EXPECT_NEAR(a.macro_f1, b.macro_f1, 1e-12);
  EXPECT_NEAR(a.balanced_accuracy, b.balanced_accuracy, 1e-12);
  EXPECT_NEAR(a.macro_precision, b.macro_precision, 1e-12);
  EXPECT_NEAR(a.macro_specificity, b.macro_specificity, 1e-12);
}

TEST(Evaluator, BenchmarkLeaderboardOrder) {
  const std::vector<std::pair<std::string, RankingTuple>> table{
      {"FDVTS_WBC", {0.777, 0.753, 0.818, 0.996}}, {"PathMedAI", {0.771, 0.733, 0.834, 0.994}},
      {"jht010312", {0.740, 0.742, 0.756, 0.995}}, {"CPRL", {0.720, 0.701, 0.759, 0.995}},
      {"PACV", {0.719, 0.707, 0.746, 0.995}},      {"AIO-MHIL", {0.708, 0.693, 0.738, 0.995}},
      {"Quan H. Cap", {0.704, 0.719, 0.695, 0.995}}, {"GODA", {0.686, 0.670, 0.710, 0.995}},
      {"jingxin2001", {0.684, 0.659, 0.728, 0.994}}, {"smart_lab", {0.682, 0.681, 0.688, 0.996}}};
  std::vector<EvalReport> reports;
  for (auto it = table.rbegin(); it != table.rend(); ++it) reports.push_back(synthetic_report(it->first, it->second));
  Stream rng(1);
  shuffle(reports, rng);
  const auto rows = rank(std::span<const EvalReport>(reports));
  ASSERT_EQ(rows.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(rows[i].rank, i + 1);
    EXPECT_EQ(rows[i].team, table[i].first);
  }
  const auto csv = format_leaderboard_csv(rows);
  EXPECT_NE(csv.find("1,FDVTS_WBC,0.777,0.753,0.818,0.996\n"), std::string::npos);
}

TEST(Evaluator, TieBreakCascade) {
  const std::vector<TeamScore> scores{{"d", {0.7, 0.6, 0.5, 0.90}}, {"c", {0.7, 0.6, 0.5, 0.95}}, {"b", {0.7, 0.6, 0.6, 0.10}},
                                      {"a", {0.7, 0.65, 0.1, 0.10}}, {"e", {0.7, 0.6, 0.5, 0.90}}, {"z", {0.71, 0.0, 0.0, 0.0}}};
  const auto rows = rank(std::span<const TeamScore>(scores));
  std::vector<std::string> order;
  for (const auto& r : rows) order.push_back(r.team);
  EXPECT_EQ(order, (std::vector<std::string>{"z", "a", "b", "c", "d", "e"}));
}

TEST(Evaluator, RankingIsPermutationInvariant) {
  Stream rng(12);
  std::vector<TeamScore> scores;
  for (int i = 0; i < 30; ++i) {
    // coarse values force plenty of ties at every level
    auto q = [&] { return static_cast<double>(rng.below(3)) / 4.0; };
    scores.push_back({"team" + std::to_string(i), {q(), q(), q(), q()}});
  }
  const auto ref = rank(std::span<const TeamScore>(scores));
  for (std::size_t i = 1; i < ref.size(); ++i) ASSERT_GE(ref[i - 1].tuple.as_tuple(), ref[i].tuple.as_tuple());
  for (int t = 0; t < 20; ++t) {
    shuffle(scores, rng);
    const auto again = rank(std::span<const TeamScore>(scores));
    for (std::size_t i = 0; i < ref.size(); ++i) ASSERT_EQ(again[i].team, ref[i].team);
  }
}

TEST(Evaluator, PerClassSummary) {
  EvalReport hit, miss;
  hit.per_class[index_of(ClassLabel::PLY)].f1 = 1.0;
  hit.per_class[index_of(ClassLabel::PLY)].support = 2;
  miss.per_class[index_of(ClassLabel::PLY)].support = 2;
  hit.per_class[0].f1 = 0.98;
  miss.per_class[0].f1 = 0.99;
  const std::vector<EvalReport> reports{hit, miss};
  const auto rows = per_class_summary(std::span<const EvalReport>(reports));
  ASSERT_EQ(rows.size(), 13u);
  EXPECT_EQ(rows[0].label, ClassLabel::SNE);
  EXPECT_NEAR(rows[0].mean_f1, 0.985, 1e-12);
  EXPECT_EQ(rows[1].label, ClassLabel::PLY);
  EXPECT_EQ(rows[1].support, 2);
  EXPECT_EQ(rows[1].mean_f1, 0.5);
  EXPECT_EQ(rows[1].min_f1, 0.0);
  EXPECT_EQ(rows[1].max_f1, 1.0);
  EXPECT_NE(format_per_class_csv(rows).find("PLY,2,0.500,0.000,1.000\n"), std::string::npos);
  EXPECT_THROW(per_class_summary(std::span<const EvalReport>()), ValidationError);
}

TEST(Evaluator, PerClassSummaryMatchesDirectAggregation) {
  Stream rng(21);
  const auto truth = random_labels(rng, 400, 1);
  std::vector<EvalReport> reports;
  for (int t = 0; t < 10; ++t) {
    auto pred = truth;
    for (auto& v : pred) {
      if (rng.bernoulli(0.1 * (t + 1) / 2)) v = static_cast<int>(rng.below(13));
    }
    reports.push_back(score(pred_of(pred), truth_of(truth)));
  }
  const auto rows = per_class_summary(std::span<const EvalReport>(reports));
  for (std::size_t i = 1; i < rows.size(); ++i) ASSERT_GE(rows[i - 1].mean_f1, rows[i].mean_f1);
  for (const auto& row : rows) {
    const auto c = index_of(row.label);
    double sum = 0, lo = 1, hi = 0;
    for (const auto& r : reports) {
      sum += r.per_class[c].f1;
      lo = std::min(lo, r.per_class[c].f1);
      hi = std::max(hi, r.per_class[c].f1);
    }
    EXPECT_NEAR(row.mean_f1, sum / 10, 1e-12);
    EXPECT_EQ(row.min_f1, lo);
    EXPECT_EQ(row.max_f1, hi);
  }
}

TEST(Evaluator, BenchmarkSupportsTotal) {
  const ClassCounts supports{8188, 138, 492, 303, 4269, 1508, 175, 184, 48, 902, 253, 15, 2};
  EXPECT_EQ(std::accumulate(supports.begin(), supports.end(), std::int64_t{0}), 16477);
}

TEST(Evaluator, ReportJsonRoundTrip) {
  Stream rng(6);
  const auto truth = random_labels(rng, 120, 1);
  auto pred = truth;
  pred[3] = (pred[3] + 1) % 13;
  auto rep = score(pred_of(pred, "team x"), truth_of(truth));
  const auto back = report_from_json(nlohmann::json::parse(to_json(rep).dump()));
  EXPECT_EQ(back.team, "team x");
  EXPECT_EQ(back.ranking_tuple(), rep.ranking_tuple());
  EXPECT_EQ(back.confusion.counts, rep.confusion.counts);
  for (std::size_t c = 0; c < 13; ++c) EXPECT_EQ(back.per_class[c].f1, rep.per_class[c].f1);
  EXPECT_EQ(back.warnings, rep.warnings);
  EXPECT_THROW(report_from_json(nlohmann::json::parse(R"({"team":"x"})")), ValidationError);
}

TEST(Evaluator, ValidSubmissionParses) {
  const auto truth = truth_of({0, 4, 12});
  std::istringstream in("image_id,label\ni2,PLY\ni0,SNE\ni1,BL\n");
  const auto pred = validate_submission(in, truth, "me");
  EXPECT_EQ(pred.entries.size(), 3u);
  EXPECT_EQ(pred.entries.at("i1"), ClassLabel::BL);
  EXPECT_EQ(pred.team, "me");
}

TEST(Evaluator, SubmissionDiagnosticsAreLineAccurate) {
  const auto truth = truth_of({0, 1, 2, 3, 4});
  std::istringstream in(
      "image_id,label\n"
      "i0,SNE\n"     // 2 ok
      "i1,XYZ\n"     // 3 bad label
      "i0,BNE\n"     // 4 duplicate
      "i9,EO\n"      // 5 unknown
      "i2,EO,x\n"    // 6 malformed
      "i3\n"         // 7 malformed
      "i2,EO\n");    // 8 ok; i3 (only malformed) and i4 missing
  try {
    validate_submission(in, truth);
    FAIL() << "expected rejection";
  } catch (const SubmissionError& e) {
    const auto& d = e.diagnostics();
    ASSERT_EQ(d.size(), 7u);
    EXPECT_EQ(d[0].kind, DiagnosticKind::InvalidLabel);
    EXPECT_EQ(d[0].line, 3u);
    EXPECT_EQ(d[1].kind, DiagnosticKind::DuplicateId);
    EXPECT_EQ(d[1].line, 4u);
    EXPECT_NE(d[1].message.find("first on line 2"), std::string::npos);
    EXPECT_EQ(d[2].kind, DiagnosticKind::UnknownId);
    EXPECT_EQ(d[2].line, 5u);
    EXPECT_EQ(d[3].kind, DiagnosticKind::MalformedRow);
    EXPECT_EQ(d[3].line, 6u);
    EXPECT_EQ(d[4].line, 7u);
    EXPECT_EQ(d[5].kind, DiagnosticKind::MissingId);
    EXPECT_EQ(d[5].image_id, "i3");
    EXPECT_EQ(d[5].line, 0u);
    EXPECT_EQ(d[6].image_id, "i4");
    EXPECT_EQ(e.count(DiagnosticKind::MalformedRow), 2u);
  }
}

TEST(Evaluator, SubmissionHeaderAndFileErrors) {
  const auto truth = truth_of({0});
  std::istringstream empty("");
  EXPECT_THROW(validate_submission(empty, truth), SubmissionError);
  std::istringstream swapped("label,image_id\nSNE,i0\n");
  try {
    validate_submission(swapped, truth);
    FAIL();
  } catch (const SubmissionError& e) {
    EXPECT_EQ(e.count(DiagnosticKind::BadHeader), 1u);
    EXPECT_EQ(e.diagnostics()[0].line, 1u);
  }
  std::istringstream lower("image_id,label\ni0,sne\n");
  EXPECT_THROW(validate_submission(lower, truth), SubmissionError);
  std::istringstream crlf("image_id,label\r\ni0,SNE\r\n");
  EXPECT_NO_THROW(validate_submission(crlf, truth));
  EXPECT_THROW(validate_submission(std::filesystem::path("/nonexistent/pred.csv"), truth), IoError);
}

TEST(Evaluator, FullTestSetScoresQuickly) {
  const ClassCounts supports{8188, 138, 492, 303, 4269, 1508, 175, 184, 48, 902, 253, 15, 2};
  std::vector<int> labels;
  for (std::size_t c = 0; c < 13; ++c) labels.insert(labels.end(), static_cast<std::size_t>(supports[c]), static_cast<int>(c));
  const auto truth = truth_of(labels);
  std::string text = "image_id,label\n";
  Stream rng(2);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int p = rng.bernoulli(0.9) ? labels[i] : static_cast<int>(rng.below(13));
    text += "i" + std::to_string(i) + "," + std::string(kClassCodes[static_cast<std::size_t>(p)]) + "\n";
  }
  const auto t0 = std::chrono::steady_clock::now();
  std::istringstream in(text);
  const auto rep = score(validate_submission(in, truth), truth);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_EQ(rep.confusion.total(), 16477);
  EXPECT_LT(secs, 2.0);
}
