#pragma once

// Severity assignment for one split.
//
// Quotas are per class: class c of size n gets largest-remainder rounding of
// fractions * n. A class whose share of the split is below the coverage
// threshold uses the protected distribution instead (no moderate or extreme
// images). Within a class, image ids are sorted, shuffled with a stream
// derived from (seed, class code) and filled in severity order. If a class
// ends up with no pristine image, its lexicographically smallest image_id is
// promoted to pristine.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "wbcbench/apportion.hpp"
#include "wbcbench/error.hpp"
#include "wbcbench/manifest.hpp"
#include "wbcbench/random.hpp"
#include "wbcbench/taxonomy.hpp"

namespace wbcbench {

/// Pristine, mild, moderate, extreme.
struct SeverityFractions {
  std::array<double, kNumSeverities> p{1.0, 0.0, 0.0, 0.0};

  constexpr double operator[](Severity s) const noexcept { return p[index_of(s)]; }
  bool operator==(const SeverityFractions&) const = default;
};

inline void validate(const SeverityFractions& f) { require_fraction_vector(f.p, "severity fractions"); }

/// Per-split defaults: phase 1 is untouched, phase 2 splits get their own mix.
inline constexpr std::array<SeverityFractions, kNumSplits> kDefaultSeverityFractions{{
    {{1.00, 0.00, 0.00, 0.00}},
    {{0.07, 0.55, 0.30, 0.08}},
    {{0.40, 0.45, 0.12, 0.03}},
    {{0.35, 0.45, 0.15, 0.05}},
}};

struct ProtectionPolicy {
  double coverage_threshold = 0.005;
  SeverityFractions protected_fractions{{0.70, 0.30, 0.0, 0.0}};
  bool guarantee_pristine_per_class = true;

  bool operator==(const ProtectionPolicy&) const = default;
};

inline void validate(const ProtectionPolicy& p) {
  if (!(p.coverage_threshold >= 0.0 && p.coverage_threshold <= 1.0)) {
    throw ValidationError("coverage_threshold must lie in [0,1]");
  }
  validate(p.protected_fractions);
  if (p.protected_fractions[Severity::Moderate] != 0.0 || p.protected_fractions[Severity::Extreme] != 0.0) {
    throw ValidationError("protected fractions must not allow moderate or extreme severity");
  }
}

using SeverityCounts = std::array<std::int64_t, kNumSeverities>;

struct SeverityPlan {
  std::map<std::string, Severity> assignment;
  /// Counts actually used per (class, severity), after any fallback promotion.
  std::array<SeverityCounts, kNumClasses> quotas{};
  std::array<bool, kNumClasses> protected_class{};
  std::array<bool, kNumClasses> fallback_applied{};
  std::uint64_t seed = 0;
};

inline SeverityPlan assign_severity(const Manifest& split_manifest, const SeverityFractions& fractions,
                                    const ProtectionPolicy& policy, std::uint64_t seed) {
  validate(fractions);
  validate(policy);
  if (split_manifest.empty()) throw ValidationError("cannot assign severities to an empty manifest");
  validate(split_manifest);
  const auto& first = split_manifest.records.front();
  for (const auto& r : split_manifest.records) {
    if (r.split != first.split) throw ValidationError("manifest mixes split tags; restrict it to one split first");
  }

  std::array<std::vector<std::string>, kNumClasses> ids;
  for (const auto& r : split_manifest.records) ids[index_of(r.label)].push_back(r.image_id);
  const auto split_size = static_cast<double>(split_manifest.size());

  SeverityPlan plan;
  plan.seed = seed;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    auto& members = ids[c];
    if (members.empty()) continue;
    std::sort(members.begin(), members.end());
    const auto n = static_cast<std::int64_t>(members.size());
    const bool is_protected = static_cast<double>(n) / split_size < policy.coverage_threshold;
    plan.protected_class[c] = is_protected;
    const auto& use = is_protected ? policy.protected_fractions : fractions;
    const auto quota = largest_remainder(use.p, n);

    const std::string smallest = members.front();
    Stream rng(derive_seed(seed, kClassCodes[c]));
    shuffle(members, rng);

    std::size_t pos = 0;
    for (std::size_t s = 0; s < kNumSeverities; ++s) {
      for (std::int64_t k = 0; k < quota[s]; ++k) plan.assignment[members[pos++]] = kAllSeverities[s];
      plan.quotas[c][s] = quota[s];
    }

    if (policy.guarantee_pristine_per_class && plan.quotas[c][0] == 0) {
      auto& sev = plan.assignment[smallest];
      --plan.quotas[c][index_of(sev)];
      ++plan.quotas[c][0];
      sev = Severity::Pristine;
      plan.fallback_applied[c] = true;
    }
  }
  return plan;
}

/// Returns a copy of `m` with severity tags from the plan; every record must be covered.
inline Manifest apply_severity(const Manifest& m, const SeverityPlan& plan) {
  Manifest out = m;
  for (auto& r : out.records) {
    auto it = plan.assignment.find(r.image_id);
    if (it == plan.assignment.end()) throw ValidationError("image '" + r.image_id + "' missing from severity plan");
    r.severity = it->second;
  }
  return out;
}

struct SplitSeverityPlans {
  /// Empty for splits with no images.
  std::array<std::optional<SeverityPlan>, kNumSplits> by_split;
  Manifest tagged;
};

/// Assigns each split on its own; split s is seeded with derive_seed(seed, token of s).
inline SplitSeverityPlans assign_all_splits(const Manifest& m, const std::array<SeverityFractions, kNumSplits>& fractions,
                                            const ProtectionPolicy& policy, std::uint64_t seed) {
  if (!m.has_split()) throw ValidationError("manifest has no split column; run split first");
  SplitSeverityPlans out;
  SeverityPlan merged;
  for (SplitName split : kAllSplits) {
    const auto part = m.restrict_to(split);
    if (part.empty()) continue;
    auto plan = assign_severity(part, fractions[index_of(split)], policy, derive_seed(seed, to_string(split)));
    merged.assignment.insert(plan.assignment.begin(), plan.assignment.end());
    out.by_split[index_of(split)] = std::move(plan);
  }
  out.tagged = apply_severity(m, merged);
  return out;
}

struct SeverityHistogram {
  std::array<SeverityCounts, kNumClasses> per_class{};
  SeverityCounts overall{};

  [[nodiscard]] std::int64_t class_total(std::size_t c) const noexcept {
    std::int64_t t = 0;
    for (auto v : per_class[c]) t += v;
    return t;
  }
  [[nodiscard]] std::int64_t total() const noexcept {
    std::int64_t t = 0;
    for (auto v : overall) t += v;
    return t;
  }
  [[nodiscard]] std::array<double, kNumSeverities> class_fractions(std::size_t c) const noexcept {
    std::array<double, kNumSeverities> f{};
    const auto t = class_total(c);
    if (t == 0) return f;
    for (std::size_t s = 0; s < kNumSeverities; ++s) f[s] = static_cast<double>(per_class[c][s]) / static_cast<double>(t);
    return f;
  }
  [[nodiscard]] std::array<double, kNumSeverities> overall_fractions() const noexcept {
    std::array<double, kNumSeverities> f{};
    const auto t = total();
    if (t == 0) return f;
    for (std::size_t s = 0; s < kNumSeverities; ++s) f[s] = static_cast<double>(overall[s]) / static_cast<double>(t);
    return f;
  }
};

/// Throws if the plan and manifest do not cover exactly the same images.
inline SeverityHistogram severity_histogram(const SeverityPlan& plan, const Manifest& m) {
  SeverityHistogram h;
  if (plan.assignment.size() != m.size()) {
    throw ValidationError("severity plan covers " + std::to_string(plan.assignment.size()) + " images, manifest has " +
                          std::to_string(m.size()));
  }
  for (const auto& r : m.records) {
    auto it = plan.assignment.find(r.image_id);
    if (it == plan.assignment.end()) throw ValidationError("image '" + r.image_id + "' missing from severity plan");
    ++h.per_class[index_of(r.label)][index_of(it->second)];
    ++h.overall[index_of(it->second)];
  }
  return h;
}

/// Histogram straight from a manifest's own severity column.
inline SeverityHistogram severity_histogram(const Manifest& m) {
  SeverityHistogram h;
  for (const auto& r : m.records) {
    if (!r.severity) throw ValidationError("image '" + r.image_id + "' has no severity");
    ++h.per_class[index_of(r.label)][index_of(*r.severity)];
    ++h.overall[index_of(*r.severity)];
  }
  return h;
}

inline nlohmann::ordered_json severity_report_json(const SeverityPlan& plan, const SeverityHistogram& h) {
  nlohmann::ordered_json j;
  j["seed"] = plan.seed;
  j["images"] = h.total();
  const auto overall = h.overall_fractions();
  for (std::size_t s = 0; s < kNumSeverities; ++s) {
    j["overall"][std::string(kSeverityTokens[s])] = {{"count", h.overall[s]}, {"fraction", overall[s]}};
  }
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (h.class_total(c) == 0) continue;
    nlohmann::ordered_json row;
    row["images"] = h.class_total(c);
    row["protected"] = plan.protected_class[c];
    row["fallback_applied"] = plan.fallback_applied[c];
    for (std::size_t s = 0; s < kNumSeverities; ++s) row["quota"][std::string(kSeverityTokens[s])] = plan.quotas[c][s];
    j["classes"][std::string(kClassCodes[c])] = row;
  }
  return j;
}

}  // namespace wbcbench
