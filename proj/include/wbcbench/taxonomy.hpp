#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "wbcbench/error.hpp"

namespace wbcbench {

/// The 13 white blood cell classes, mature forms first, rare/abnormal forms last.
enum class ClassLabel : std::uint8_t { SNE, BNE, EO, BA, LY, MO, MMY, MY, PMY, BL, VLY, PC, PLY };

inline constexpr std::size_t kNumClasses = 13;

inline constexpr std::array<std::string_view, kNumClasses> kClassCodes{
    "SNE", "BNE", "EO", "BA", "LY", "MO", "MMY", "MY", "PMY", "BL", "VLY", "PC", "PLY"};

inline constexpr std::array<ClassLabel, kNumClasses> kAllClasses{
    ClassLabel::SNE, ClassLabel::BNE, ClassLabel::EO,  ClassLabel::BA,  ClassLabel::LY,
    ClassLabel::MO,  ClassLabel::MMY, ClassLabel::MY,  ClassLabel::PMY, ClassLabel::BL,
    ClassLabel::VLY, ClassLabel::PC,  ClassLabel::PLY};

/// Integer tally indexed by class ordinal.
using ClassCounts = std::array<std::int64_t, kNumClasses>;

constexpr std::size_t index_of(ClassLabel c) noexcept { return static_cast<std::size_t>(c); }

constexpr std::string_view to_string(ClassLabel c) noexcept { return kClassCodes[index_of(c)]; }

/// Case-sensitive: "sne" is not a label.
constexpr std::optional<ClassLabel> parse_class_label(std::string_view token) noexcept {
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    if (kClassCodes[i] == token) return kAllClasses[i];
  }
  return std::nullopt;
}

enum class Severity : std::uint8_t { Pristine = 0, Mild = 1, Moderate = 2, Extreme = 3 };

inline constexpr std::size_t kNumSeverities = 4;
inline constexpr std::array<Severity, kNumSeverities> kAllSeverities{
    Severity::Pristine, Severity::Mild, Severity::Moderate, Severity::Extreme};
inline constexpr std::array<std::string_view, kNumSeverities> kSeverityTokens{
    "pristine", "mild", "moderate", "extreme"};

constexpr std::size_t index_of(Severity s) noexcept { return static_cast<std::size_t>(s); }
constexpr std::string_view to_string(Severity s) noexcept { return kSeverityTokens[index_of(s)]; }

constexpr std::optional<Severity> parse_severity(std::string_view token) noexcept {
  for (std::size_t i = 0; i < kNumSeverities; ++i) {
    if (kSeverityTokens[i] == token) return kAllSeverities[i];
  }
  return std::nullopt;
}

enum class SplitName : std::uint8_t { Phase1Train, Phase2Train, Phase2Eval, Phase2Test };

inline constexpr std::size_t kNumSplits = 4;
inline constexpr std::array<SplitName, kNumSplits> kAllSplits{
    SplitName::Phase1Train, SplitName::Phase2Train, SplitName::Phase2Eval, SplitName::Phase2Test};
inline constexpr std::array<std::string_view, kNumSplits> kSplitTokens{
    "phase1_train", "phase2_train", "phase2_eval", "phase2_test"};

constexpr std::size_t index_of(SplitName s) noexcept { return static_cast<std::size_t>(s); }
constexpr std::string_view to_string(SplitName s) noexcept { return kSplitTokens[index_of(s)]; }

constexpr std::optional<SplitName> parse_split(std::string_view token) noexcept {
  for (std::size_t i = 0; i < kNumSplits; ++i) {
    if (kSplitTokens[i] == token) return kAllSplits[i];
  }
  return std::nullopt;
}

inline ClassLabel require_class_label(std::string_view token) {
  if (auto c = parse_class_label(token)) return *c;
  throw ValidationError("unknown class label '" + std::string(token) + "'");
}

inline Severity require_severity(std::string_view token) {
  if (auto s = parse_severity(token)) return *s;
  throw ValidationError("unknown severity '" + std::string(token) + "'");
}

inline SplitName require_split(std::string_view token) {
  if (auto s = parse_split(token)) return *s;
  throw ValidationError("unknown split '" + std::string(token) + "'");
}

}  // namespace wbcbench
