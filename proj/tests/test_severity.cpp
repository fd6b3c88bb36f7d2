#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <string>

#include "wbcbench/severity.hpp"

using namespace wbcbench;

namespace {

/// One split with `counts[c]` images of class c; ids encode class and index.
Manifest split_with(const ClassCounts& counts, SplitName split = SplitName::Phase2Train) {
  Manifest m;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    for (std::int64_t i = 0; i < counts[c]; ++i) {
      auto r = make_record(std::string(kClassCodes[c]) + "_" + std::to_string(i), "P" + std::to_string(i % 17), kAllClasses[c]);
      r.split = split;
      m.records.push_back(std::move(r));
    }
  }
  return m;
}

const SeverityFractions kTrain{{0.07, 0.55, 0.30, 0.08}};

}  // namespace

TEST(Severity, DefaultTableMatchesBenchmarkFractions) {
  EXPECT_EQ(kDefaultSeverityFractions[0], (SeverityFractions{{1.0, 0.0, 0.0, 0.0}}));
  EXPECT_EQ(kDefaultSeverityFractions[1], (SeverityFractions{{0.07, 0.55, 0.30, 0.08}}));
  EXPECT_EQ(kDefaultSeverityFractions[2], (SeverityFractions{{0.40, 0.45, 0.12, 0.03}}));
  EXPECT_EQ(kDefaultSeverityFractions[3], (SeverityFractions{{0.35, 0.45, 0.15, 0.05}}));
  const ProtectionPolicy p;
  EXPECT_EQ(p.coverage_threshold, 0.005);
  EXPECT_EQ(p.protected_fractions, (SeverityFractions{{0.70, 0.30, 0.0, 0.0}}));
}

TEST(Severity, DegenerateFractionsMakeEverythingPristine) {
  ClassCounts counts{};
  counts[0] = 10;
  const auto m = split_with(counts);
  const auto plan = assign_severity(m, SeverityFractions{{1, 0, 0, 0}}, ProtectionPolicy{}, 1);
  const auto h = severity_histogram(plan, m);
  EXPECT_EQ(h.per_class[0], (SeverityCounts{10, 0, 0, 0}));
  EXPECT_EQ(h.overall_fractions(), (std::array<double, 4>{1, 0, 0, 0}));
}

TEST(Severity, RareClassGetsProtectedSplit) {
  ClassCounts counts{};
  counts[index_of(ClassLabel::SNE)] = 2490;
  counts[index_of(ClassLabel::PLY)] = 10;  // 0.4% of 2500
  const auto m = split_with(counts);
  const auto plan = assign_severity(m, kTrain, ProtectionPolicy{}, 5);
  const auto ply = index_of(ClassLabel::PLY);
  EXPECT_TRUE(plan.protected_class[ply]);
  EXPECT_FALSE(plan.protected_class[0]);
  EXPECT_EQ(plan.quotas[ply], (SeverityCounts{7, 3, 0, 0}));
  EXPECT_EQ(severity_histogram(plan, m).per_class[ply], (SeverityCounts{7, 3, 0, 0}));
}

TEST(Severity, FallbackPromotesExactlyOneImage) {
  ClassCounts counts{};
  counts[index_of(ClassLabel::MO)] = 3;
  const auto m = split_with(counts);
  ProtectionPolicy policy;
  policy.coverage_threshold = 0.0;
  const SeverityFractions f{{0.0, 0.55, 0.30, 0.15}};
  const auto plan = assign_severity(m, f, policy, 9);
  const auto mo = index_of(ClassLabel::MO);
  EXPECT_TRUE(plan.fallback_applied[mo]);
  EXPECT_EQ(plan.quotas[mo][0], 1);
  EXPECT_EQ(plan.quotas[mo][0] + plan.quotas[mo][1] + plan.quotas[mo][2] + plan.quotas[mo][3], 3);
  EXPECT_EQ(plan.assignment.at("MO_0"), Severity::Pristine);  // smallest id
  policy.guarantee_pristine_per_class = false;
  EXPECT_EQ(assign_severity(m, f, policy, 9).quotas[mo][0], 0);
}

TEST(Severity, LargeSplitReproducesFractionsPerClass) {
  // 24 897 images, all classes common.
  ClassCounts counts{};
  std::int64_t left = 24897;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    counts[c] = c + 1 < kNumClasses ? 1900 + static_cast<std::int64_t>(c) * 3 : left;
    left -= counts[c];
  }
  const auto m = split_with(counts);
  ASSERT_EQ(m.size(), 24897u);
  const auto plan = assign_severity(m, kTrain, ProtectionPolicy{}, 11);
  const auto h = severity_histogram(plan, m);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto f = h.class_fractions(c);
    for (std::size_t s = 0; s < 4; ++s) EXPECT_LE(std::abs(f[s] - kTrain.p[s]), 3.0 / counts[c]);
  }
  const auto overall = h.overall_fractions();
  for (std::size_t s = 0; s < 4; ++s) EXPECT_NEAR(overall[s], kTrain.p[s], 13.0 / 24897);
}

TEST(Severity, HistogramRowsAreSymmetric) {
  ClassCounts counts{};
  counts[index_of(ClassLabel::EO)] = 200;
  counts[index_of(ClassLabel::BA)] = 200;
  const auto m = split_with(counts);
  const auto h = severity_histogram(assign_severity(m, kTrain, ProtectionPolicy{}, 2), m);
  EXPECT_EQ(h.per_class[index_of(ClassLabel::EO)], h.per_class[index_of(ClassLabel::BA)]);
}

TEST(Severity, InvariantsHoldOnRandomSplits) {
  Stream rng(1234);
  for (int trial = 0; trial < 200; ++trial) {
    ClassCounts counts{};
    for (auto& n : counts) n = rng.bernoulli(0.7) ? rng.uniform_int(1, rng.bernoulli(0.2) ? 3 : 400) : 0;
    if (std::accumulate(counts.begin(), counts.end(), std::int64_t{0}) == 0) counts[0] = 1;
    std::array<double, 4> raw{};
    double sum = 0;
    for (auto& x : raw) sum += (x = rng.bernoulli(0.2) ? 0.0 : rng.next_unit());
    if (sum == 0) raw[1] = sum = 1;
    SeverityFractions f;
    for (std::size_t s = 0; s < 4; ++s) f.p[s] = raw[s] / sum;
    const auto m = split_with(counts);
    const ProtectionPolicy policy;
    const auto plan = assign_severity(m, f, policy, rng.next_u64());
    ASSERT_EQ(plan.assignment.size(), m.size());
    const auto h = severity_histogram(plan, m);
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      if (counts[c] == 0) continue;
      ASSERT_EQ(h.class_total(c), counts[c]);
      ASSERT_EQ(h.per_class[c], plan.quotas[c]);
      ASSERT_GE(h.per_class[c][0], 1);  // pristine guarantee
      const bool rare = static_cast<double>(counts[c]) / m.size() < policy.coverage_threshold;
      if (rare) {
        ASSERT_EQ(h.per_class[c][2] + h.per_class[c][3], 0);
      } else if (!plan.fallback_applied[c]) {
        const auto fr = h.class_fractions(c);
        for (std::size_t s = 0; s < 4; ++s) ASSERT_LE(std::abs(fr[s] - f.p[s]), 3.0 / counts[c] + 1e-12);
      }
    }
  }
}

TEST(Severity, ClassAssignmentIsIndependentOfOtherClasses) {
  ClassCounts a{};
  a[index_of(ClassLabel::SNE)] = 300;
  a[index_of(ClassLabel::LY)] = 200;
  ClassCounts b = a;
  b[index_of(ClassLabel::SNE)] = 340;  // only SNE changes
  const auto pa = assign_severity(split_with(a), kTrain, ProtectionPolicy{}, 77);
  const auto pb = assign_severity(split_with(b), kTrain, ProtectionPolicy{}, 77);
  for (int i = 0; i < 200; ++i) {
    const std::string id = "LY_" + std::to_string(i);
    ASSERT_EQ(pa.assignment.at(id), pb.assignment.at(id));
  }
}

TEST(Severity, DeterministicAndOrderIndependent) {
  ClassCounts counts{};
  counts[0] = 50;
  counts[4] = 30;
  auto m = split_with(counts);
  const auto p1 = assign_severity(m, kTrain, ProtectionPolicy{}, 3);
  std::reverse(m.records.begin(), m.records.end());
  const auto p2 = assign_severity(m, kTrain, ProtectionPolicy{}, 3);
  EXPECT_EQ(p1.assignment, p2.assignment);
  const auto p3 = assign_severity(m, kTrain, ProtectionPolicy{}, 4);
  EXPECT_NE(p1.assignment, p3.assignment);
}

TEST(Severity, RejectsBadInput) {
  ClassCounts counts{};
  counts[0] = 5;
  const auto m = split_with(counts);
  EXPECT_THROW(assign_severity(Manifest{}, kTrain, ProtectionPolicy{}, 1), ValidationError);
  EXPECT_THROW(assign_severity(m, SeverityFractions{{0.5, 0.5, 0.5, 0}}, ProtectionPolicy{}, 1), ValidationError);
  ProtectionPolicy bad;
  bad.protected_fractions = SeverityFractions{{0.5, 0.3, 0.2, 0}};
  EXPECT_THROW(assign_severity(m, kTrain, bad, 1), ValidationError);
  auto mixed = m;
  mixed.records[0].split = SplitName::Phase2Test;
  EXPECT_THROW(assign_severity(mixed, kTrain, ProtectionPolicy{}, 1), ValidationError);
  const auto plan = assign_severity(m, kTrain, ProtectionPolicy{}, 1);
  auto bigger = m;
  bigger.records.push_back(make_record("extra", "P", ClassLabel::SNE));
  EXPECT_THROW(severity_histogram(plan, bigger), ValidationError);
}

TEST(Severity, AllSplitsUseTheirOwnFractionsAndSeeds) {
  ClassCounts counts{};
  counts[0] = 40;
  counts[4] = 40;
  auto m = split_with(counts, SplitName::Phase1Train);
  for (std::size_t i = 0; i < m.records.size(); i += 2) m.records[i].split = SplitName::Phase2Test;
  const auto result = assign_all_splits(m, kDefaultSeverityFractions, ProtectionPolicy{}, 10);
  EXPECT_FALSE(result.by_split[index_of(SplitName::Phase2Train)].has_value());
  const auto& p1 = *result.by_split[index_of(SplitName::Phase1Train)];
  for (const auto& [id, sev] : p1.assignment) EXPECT_EQ(sev, Severity::Pristine);
  const auto test_part = m.restrict_to(SplitName::Phase2Test);
  const auto direct = assign_severity(test_part, kDefaultSeverityFractions[3], ProtectionPolicy{}, derive_seed(10, "phase2_test"));
  EXPECT_EQ(result.by_split[index_of(SplitName::Phase2Test)]->assignment, direct.assignment);
  EXPECT_TRUE(result.tagged.has_severity());
  auto untagged = m;
  for (auto& r : untagged.records) r.split.reset();
  EXPECT_THROW(assign_all_splits(untagged, kDefaultSeverityFractions, ProtectionPolicy{}, 1), ValidationError);
}
