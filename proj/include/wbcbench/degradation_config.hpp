#pragma once

// Operator vocabulary and the severity-dependent sampling ranges.
//
// JPEG compression and rotation are deliberately not operators.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "wbcbench/error.hpp"
#include "wbcbench/manifest.hpp"
#include "wbcbench/taxonomy.hpp"

namespace wbcbench {

enum class OperatorKind : std::uint8_t {
  Crop,
  GaussianBlur,
  MotionBlur,
  GaussianNoise,
  PoissonNoise,
  Saturation,
  Gamma,
  Brightness,
  Vignetting,
  ColorJitter,
};

inline constexpr std::size_t kNumOperators = 10;
inline constexpr std::array<std::string_view, kNumOperators> kOperatorNames{
    "Crop",   "GaussianBlur", "MotionBlur", "GaussianNoise", "PoissonNoise",
    "Saturation", "Gamma",    "Brightness", "Vignetting",    "ColorJitter"};

constexpr std::size_t index_of(OperatorKind k) noexcept { return static_cast<std::size_t>(k); }
constexpr std::string_view to_string(OperatorKind k) noexcept { return kOperatorNames[index_of(k)]; }

constexpr std::optional<OperatorKind> parse_operator(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kNumOperators; ++i) {
    if (kOperatorNames[i] == name) return static_cast<OperatorKind>(i);
  }
  return std::nullopt;
}

/// Every sampled quantity, one per (operator, parameter) pair.
enum class Param : std::uint8_t {
  CropRatio,
  BlurSigma,
  MotionKernel,
  MotionProb,
  MotionAngle,
  NoiseStd,
  PoissonRate,
  SaturationDelta,
  Gamma,
  BrightnessDelta,
  VignetteStrength,
  JitterFactor,
  JitterProb,
};

inline constexpr std::size_t kNumParams = 13;

struct ParamInfo {
  OperatorKind op;
  std::string_view name;
};

inline constexpr std::array<ParamInfo, kNumParams> kParamInfo{{
    {OperatorKind::Crop, "ratio"},
    {OperatorKind::GaussianBlur, "sigma"},
    {OperatorKind::MotionBlur, "kernel"},
    {OperatorKind::MotionBlur, "apply_prob"},
    {OperatorKind::MotionBlur, "angle"},
    {OperatorKind::GaussianNoise, "std"},
    {OperatorKind::PoissonNoise, "rate"},
    {OperatorKind::Saturation, "delta_s"},
    {OperatorKind::Gamma, "gamma"},
    {OperatorKind::Brightness, "delta_i"},
    {OperatorKind::Vignetting, "strength"},
    {OperatorKind::ColorJitter, "factor"},
    {OperatorKind::ColorJitter, "prob"},
}};

constexpr std::size_t index_of(Param p) noexcept { return static_cast<std::size_t>(p); }
constexpr OperatorKind operator_of(Param p) noexcept { return kParamInfo[index_of(p)].op; }
constexpr std::string_view param_name(Param p) noexcept { return kParamInfo[index_of(p)].name; }

constexpr std::optional<Param> find_param(OperatorKind op, std::string_view name) noexcept {
  for (std::size_t i = 0; i < kNumParams; ++i) {
    if (kParamInfo[i].op == op && kParamInfo[i].name == name) return static_cast<Param>(i);
  }
  return std::nullopt;
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  [[nodiscard]] constexpr bool contains(double v) const noexcept { return v >= lo && v <= hi; }
  bool operator==(const Interval&) const = default;
};

/// Index 0 = mild, 1 = moderate, 2 = extreme; pristine has no ranges.
constexpr std::size_t degraded_index(Severity s) {
  if (s == Severity::Pristine) throw ValidationError("pristine severity has no degradation parameters");
  return index_of(s) - 1;
}

inline constexpr std::array<Severity, 3> kDegradedSeverities{Severity::Mild, Severity::Moderate, Severity::Extreme};

struct ParamRanges {
  std::array<std::array<Interval, kNumParams>, 3> by_severity{};

  [[nodiscard]] const Interval& at(Severity s, Param p) const { return by_severity[degraded_index(s)][index_of(p)]; }
  Interval& at(Severity s, Param p) { return by_severity[degraded_index(s)][index_of(p)]; }

  bool operator==(const ParamRanges&) const = default;
};

/// Uniform sampling intervals per severity (mild, moderate, extreme).
inline ParamRanges default_param_ranges() {
  ParamRanges r;
  auto set = [&](Param p, Interval mild, Interval moderate, Interval extreme) {
    r.at(Severity::Mild, p) = mild;
    r.at(Severity::Moderate, p) = moderate;
    r.at(Severity::Extreme, p) = extreme;
  };
  set(Param::CropRatio, {0.02, 0.10}, {0.10, 0.20}, {0.20, 0.30});
  set(Param::BlurSigma, {0.2, 1.0}, {1.0, 2.0}, {2.0, 3.0});
  set(Param::MotionKernel, {3, 15}, {5, 25}, {20, 35});
  set(Param::MotionProb, {0.1, 0.3}, {0.3, 0.7}, {0.7, 1.0});
  set(Param::MotionAngle, {0, 360}, {0, 360}, {0, 360});
  set(Param::NoiseStd, {2, 8}, {8, 18}, {18, 25.5});
  set(Param::PoissonRate, {0.5, 2.0}, {2.0, 4.0}, {3.5, 5.0});
  set(Param::SaturationDelta, {-10, 10}, {-15, 15}, {-25, 25});
  set(Param::Gamma, {0.9, 1.1}, {0.8, 1.3}, {0.5, 1.5});
  set(Param::BrightnessDelta, {-10, 10}, {-15, 15}, {-25, 25});
  set(Param::VignetteStrength, {0.1, 0.3}, {0.3, 0.6}, {0.5, 0.8});
  set(Param::JitterFactor, {0.95, 1.05}, {0.90, 1.10}, {0.85, 1.15});
  set(Param::JitterProb, {0.5, 1.0}, {0.7, 1.0}, {0.8, 1.0});
  return r;
}

struct CountInterval {
  int lo = 1;
  int hi = 1;
  bool operator==(const CountInterval&) const = default;
};

/// Number of distinct operators per recipe, by severity (mild, moderate, extreme).
struct OperatorCountRule {
  std::array<CountInterval, 3> by_severity{{{1, 3}, {1, 4}, {3, 5}}};

  [[nodiscard]] const CountInterval& at(Severity s) const { return by_severity[degraded_index(s)]; }
  CountInterval& at(Severity s) { return by_severity[degraded_index(s)]; }

  bool operator==(const OperatorCountRule&) const = default;
};

struct DegradationConfig {
  int image_side = kDefaultImageSide;
  ParamRanges ranges = default_param_ranges();
  OperatorCountRule counts;

  bool operator==(const DegradationConfig&) const = default;
};

inline void validate(const DegradationConfig& cfg) {
  if (cfg.image_side < 1) throw ValidationError("image_side must be positive");
  for (Severity s : kDegradedSeverities) {
    const auto& c = cfg.counts.at(s);
    if (c.lo < 1 || c.hi > static_cast<int>(kNumOperators) || c.lo > c.hi) {
      throw ValidationError("operator count interval for " + std::string(to_string(s)) + " must satisfy 1 <= lo <= hi <= 10");
    }
    for (std::size_t p = 0; p < kNumParams; ++p) {
      const auto& iv = cfg.ranges.by_severity[degraded_index(s)][p];
      const std::string where = std::string(to_string(kParamInfo[p].op)) + "." + std::string(kParamInfo[p].name) + " (" +
                                std::string(to_string(s)) + ")";
      if (!(iv.lo <= iv.hi)) throw ValidationError(where + ": interval low exceeds high");
      const auto param = static_cast<Param>(p);
      const bool unit = param == Param::CropRatio || param == Param::MotionProb || param == Param::JitterProb ||
                        param == Param::VignetteStrength;
      if (unit && (iv.lo < 0.0 || iv.hi > 1.0)) throw ValidationError(where + ": must lie in [0,1]");
      if (param == Param::CropRatio && iv.hi >= 1.0) throw ValidationError(where + ": crop ratio must be below 1");
      const bool positive = param == Param::BlurSigma || param == Param::Gamma || param == Param::PoissonRate ||
                            param == Param::MotionKernel || param == Param::JitterFactor;
      if (positive && !(iv.lo > 0.0)) throw ValidationError(where + ": must be positive");
      if (param == Param::NoiseStd && iv.lo < 0.0) throw ValidationError(where + ": must be non-negative");
    }
  }
}

inline nlohmann::ordered_json to_json(const DegradationConfig& cfg) {
  nlohmann::ordered_json j;
  j["image_side"] = cfg.image_side;
  for (Severity s : kDegradedSeverities) {
    const auto& c = cfg.counts.at(s);
    j["operator_counts"][std::string(to_string(s))] = {c.lo, c.hi};
  }
  for (std::size_t p = 0; p < kNumParams; ++p) {
    const auto param = static_cast<Param>(p);
    auto& slot = j["param_ranges"][std::string(to_string(operator_of(param)))][std::string(param_name(param))];
    for (Severity s : kDegradedSeverities) {
      const auto& iv = cfg.ranges.at(s, param);
      slot[std::string(to_string(s))] = {iv.lo, iv.hi};
    }
  }
  return j;
}

/// Missing keys keep their defaults; unknown operators or parameters are errors.
inline DegradationConfig degradation_config_from_json(const nlohmann::json& j, DegradationConfig cfg = {}) {
  try {
    if (j.contains("image_side")) cfg.image_side = j.at("image_side").get<int>();
    if (j.contains("operator_counts")) {
      for (const auto& [sev, pair] : j.at("operator_counts").items()) {
        const Severity s = require_severity(sev);
        cfg.counts.at(s) = CountInterval{pair.at(0).get<int>(), pair.at(1).get<int>()};
      }
    }
    if (j.contains("param_ranges")) {
      for (const auto& [op_name, params] : j.at("param_ranges").items()) {
        const auto op = parse_operator(op_name);
        if (!op) throw ValidationError("unknown operator '" + op_name + "' in config");
        for (const auto& [pname, by_sev] : params.items()) {
          const auto param = find_param(*op, pname);
          if (!param) throw ValidationError("unknown parameter '" + op_name + "." + pname + "' in config");
          for (const auto& [sev, pair] : by_sev.items()) {
            cfg.ranges.at(require_severity(sev), *param) = Interval{pair.at(0).get<double>(), pair.at(1).get<double>()};
          }
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed degradation config: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

}  // namespace wbcbench
