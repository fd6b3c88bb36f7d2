#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"

#include "wbcbench/degradation_config.hpp"
#include "wbcbench/error.hpp"
#include "wbcbench/random.hpp"
#include "wbcbench/severity.hpp"
#include "wbcbench/splitter.hpp"

namespace wbcbench {

/// Everything a pipeline run depends on besides its input data. Defaults are
/// the benchmark's split proportions, severity mixes and operator ranges.
struct PipelineConfig {
  std::uint64_t seed = 0;
  unsigned workers = 1;
  SplitTargets split;
  std::array<SeverityFractions, kNumSplits> severity = kDefaultSeverityFractions;
  ProtectionPolicy protection;
  DegradationConfig degradation;
};

inline nlohmann::ordered_json to_json(const PipelineConfig& cfg) {
  nlohmann::ordered_json j;
  j["seed"] = cfg.seed;
  j["workers"] = cfg.workers;
  for (std::size_t s = 0; s < kNumSplits; ++s) j["split"]["patient_fraction"][std::string(kSplitTokens[s])] = cfg.split.patient_fraction[s];
  j["split"]["rarity_exponent"] = cfg.split.rarity_exponent;
  j["split"]["restarts"] = cfg.split.restarts;
  for (std::size_t s = 0; s < kNumSplits; ++s) {
    auto& block = j["severity_fractions"][std::string(kSplitTokens[s])];
    for (std::size_t v = 0; v < kNumSeverities; ++v) block[std::string(kSeverityTokens[v])] = cfg.severity[s].p[v];
  }
  j["protection"]["coverage_threshold"] = cfg.protection.coverage_threshold;
  for (std::size_t v = 0; v < kNumSeverities; ++v) {
    j["protection"]["protected_fractions"][std::string(kSeverityTokens[v])] = cfg.protection.protected_fractions.p[v];
  }
  j["protection"]["guarantee_pristine_per_class"] = cfg.protection.guarantee_pristine_per_class;
  j["degradation"] = to_json(cfg.degradation);
  return j;
}

/// Overlays `j` on `base`; keys that are absent keep the base value.
inline PipelineConfig pipeline_config_from_json(const nlohmann::json& j, PipelineConfig base = {}) {
  PipelineConfig cfg = std::move(base);
  try {
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("workers")) cfg.workers = j.at("workers").get<unsigned>();
    if (j.contains("split")) {
      const auto& s = j.at("split");
      if (s.contains("patient_fraction")) {
        for (const auto& [name, v] : s.at("patient_fraction").items()) cfg.split.patient_fraction[index_of(require_split(name))] = v.get<double>();
      }
      if (s.contains("rarity_exponent")) cfg.split.rarity_exponent = s.at("rarity_exponent").get<double>();
      if (s.contains("restarts")) cfg.split.restarts = s.at("restarts").get<int>();
    }
    if (j.contains("severity_fractions")) {
      for (const auto& [name, block] : j.at("severity_fractions").items()) {
        auto& f = cfg.severity[index_of(require_split(name))];
        for (const auto& [sev, v] : block.items()) f.p[index_of(require_severity(sev))] = v.get<double>();
      }
    }
    if (j.contains("protection")) {
      const auto& p = j.at("protection");
      if (p.contains("coverage_threshold")) cfg.protection.coverage_threshold = p.at("coverage_threshold").get<double>();
      if (p.contains("protected_fractions")) {
        for (const auto& [sev, v] : p.at("protected_fractions").items()) {
          cfg.protection.protected_fractions.p[index_of(require_severity(sev))] = v.get<double>();
        }
      }
      if (p.contains("guarantee_pristine_per_class")) {
        cfg.protection.guarantee_pristine_per_class = p.at("guarantee_pristine_per_class").get<bool>();
      }
    }
    if (j.contains("degradation")) cfg.degradation = degradation_config_from_json(j.at("degradation"), cfg.degradation);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed config: ") + e.what());
  }
  validate_targets(cfg.split);
  for (const auto& f : cfg.severity) validate(f);
  validate(cfg.protection);
  validate(cfg.degradation);
  return cfg;
}

inline PipelineConfig load_pipeline_config(const std::filesystem::path& path, PipelineConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return pipeline_config_from_json(j, std::move(base));
}

/// FNV-1a of the canonical JSON dump, as 16 hex digits. The worker count is
/// left out: it never changes any output.
inline std::string config_hash(const PipelineConfig& cfg) {
  auto j = to_json(cfg);
  j.erase("workers");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
  return buf;
}

}  // namespace wbcbench
