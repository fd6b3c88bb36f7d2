#include <gtest/gtest.h>

#include <sstream>
#include <string>

#include "wbcbench/manifest.hpp"
#include "wbcbench/random.hpp"

using namespace wbcbench;

namespace {

Manifest parse(const std::string& text) {
  std::istringstream in(text);
  return parse_manifest(in, "m.csv");
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Taxonomy, ThirteenDistinctCodes) {
  EXPECT_EQ(kClassCodes.size(), 13u);
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    for (std::size_t j = i + 1; j < kNumClasses; ++j) EXPECT_NE(kClassCodes[i], kClassCodes[j]);
    EXPECT_EQ(parse_class_label(kClassCodes[i]), kAllClasses[i]);
    EXPECT_EQ(to_string(kAllClasses[i]), kClassCodes[i]);
  }
}

TEST(Taxonomy, VocabularyIsClosedAndCaseSensitive) {
  for (const char* bad : {"sne", "Sne", "NEUTRO", "", " SNE", "SNE ", "PLY2", "BLAST"}) {
    EXPECT_FALSE(parse_class_label(bad).has_value()) << bad;
  }
  // Every 2- and 3-letter uppercase token that is not a code is rejected.
  std::size_t accepted = 0;
  for (char a = 'A'; a <= 'Z'; ++a) {
    for (char b = 'A'; b <= 'Z'; ++b) {
      accepted += parse_class_label(std::string{a, b}).has_value();
      for (char c = 'A'; c <= 'Z'; ++c) accepted += parse_class_label(std::string{a, b, c}).has_value();
    }
  }
  EXPECT_EQ(accepted, 13u);
}

TEST(Taxonomy, SeverityOrderIsTotal) {
  EXPECT_LT(Severity::Pristine, Severity::Mild);
  EXPECT_LT(Severity::Mild, Severity::Moderate);
  EXPECT_LT(Severity::Moderate, Severity::Extreme);
  for (auto s : kAllSeverities) EXPECT_EQ(parse_severity(to_string(s)), s);
  for (auto s : kAllSplits) EXPECT_EQ(parse_split(to_string(s)), s);
  EXPECT_FALSE(parse_split("phase3_test").has_value());
}

TEST(Manifest, ParsesThreeRows) {
  const auto m = parse("image_id,patient_id,label\na,p1,SNE\nb,p1,LY\nc,p2,PLY\n");
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(m.records[0].label, ClassLabel::SNE);
  EXPECT_EQ(m.records[1].label, ClassLabel::LY);
  EXPECT_EQ(m.records[2].label, ClassLabel::PLY);
  EXPECT_EQ(m.records[2].source_path, std::filesystem::path("c.png"));
  EXPECT_FALSE(m.has_split());
}

TEST(Manifest, DuplicateIdNamesIdAndLine) {
  const auto msg = error_of("image_id,patient_id,label\nimg_7,p,SNE\nimg_8,p,SNE\nimg_7,q,LY\n");
  EXPECT_NE(msg.find("img_7"), std::string::npos);
  EXPECT_NE(msg.find("m.csv:4"), std::string::npos);
  EXPECT_NE(msg.find("line 2"), std::string::npos);
}

TEST(Manifest, RejectsUnknownTokensAndMalformedRows) {
  EXPECT_NE(error_of("image_id,patient_id,label\na,p,NEUTRO\n").find("unknown label 'NEUTRO'"), std::string::npos);
  EXPECT_NE(error_of("image_id,patient_id,label,split\na,p,SNE,phase3\n").find("unknown split"), std::string::npos);
  EXPECT_NE(error_of("image_id,patient_id,label,severity\na,p,SNE,heavy\n").find("unknown severity"), std::string::npos);
  EXPECT_NE(error_of("image_id,patient_id,label\na,p,SNE\nb,p\n").find("m.csv:3: malformed row"), std::string::npos);
  EXPECT_NE(error_of("image_id,patient_id,label,seed\na,p,SNE,12x\n").find("malformed seed"), std::string::npos);
  EXPECT_NE(error_of("image_id,label,patient_id\n").find("header"), std::string::npos);
  EXPECT_NE(error_of("image_id,patient_id,label,severity,split\n").find("misordered"), std::string::npos);
  EXPECT_NE(error_of("").find("missing header"), std::string::npos);
}

TEST(Manifest, EmptyManifestWritesHeaderOnly) {
  EXPECT_EQ(format_manifest(Manifest{}), "image_id,patient_id,label\n");
  EXPECT_TRUE(parse("image_id,patient_id,label\n").empty());
}

TEST(Manifest, SeverityTagsProduceSeverityColumn) {
  Manifest m;
  m.records.push_back(make_record("a", "p", ClassLabel::BL));
  m.records.back().severity = Severity::Extreme;
  EXPECT_EQ(format_manifest(m), "image_id,patient_id,label,severity\na,p,BL,extreme\n");
}

TEST(Manifest, PartialOptionalColumnsAreInvalid) {
  Manifest m;
  m.records.push_back(make_record("a", "p", ClassLabel::BL));
  m.records.push_back(make_record("b", "p", ClassLabel::BL));
  m.records[1].split = SplitName::Phase2Test;
  EXPECT_THROW(validate(m), ValidationError);
}

TEST(Manifest, RoundTripIsIdentityOnRandomManifests) {
  Stream rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    Manifest m;
    const bool with_split = rng.bernoulli(0.5);
    const bool with_sev = rng.bernoulli(0.5);
    const bool with_seed = rng.bernoulli(0.5);
    const auto n = rng.uniform_int(0, 100);
    for (std::int64_t i = 0; i < n; ++i) {
      auto r = make_record("img_" + std::to_string(trial) + "_" + std::to_string(i),
                           "P" + std::to_string(rng.below(20)), kAllClasses[rng.below(kNumClasses)]);
      if (with_split) r.split = kAllSplits[rng.below(kNumSplits)];
      if (with_sev) r.severity = kAllSeverities[rng.below(kNumSeverities)];
      if (with_seed) r.seed = rng.next_u64();
      m.records.push_back(std::move(r));
    }
    const auto text = format_manifest(m);
    EXPECT_EQ(text.find('\r'), std::string::npos);
    const auto back = parse(text);
    EXPECT_EQ(back, m);
    EXPECT_EQ(format_manifest(back), text);
  }
}

TEST(Manifest, FileRoundTrip) {
  Manifest m;
  for (int i = 0; i < 100; ++i) m.records.push_back(make_record("img_" + std::to_string(i), "P" + std::to_string(i % 7), kAllClasses[i % 13]));
  const auto path = std::filesystem::temp_directory_path() / "wbcbench_manifest_roundtrip.csv";
  write_manifest(m, path);
  EXPECT_EQ(parse_manifest(path), m);
  std::filesystem::remove(path);
  EXPECT_THROW(parse_manifest(std::filesystem::path("/nonexistent/dir/m.csv")), IoError);
}
