#pragma once

// Patient-level, group-stratified split planning.
//
// Patients are indivisible. Each split receives a fixed number of patients
// (largest-remainder rounding of its fraction) and the plan steers every
// class's image share in each split toward that split's patient fraction.
//
// Objective (lower is better; this toolkit's choice of stratification loss):
//
//   score = sum_s sum_c w_c * | n(s,c) / n(c) - f_s |
//   w_c   = n(c)^(-rarity_exponent), normalised over classes present
//
// Search: for each restart, a greedy pass places patients (rarest-heavy
// first) into the split whose weighted class deficit they fill best, then a
// pairwise-swap descent polishes the partition. Restart 0 uses the plain
// rarity order; later restarts jitter it from their own seeded stream. The
// lowest score wins, ties going to the lowest restart index, so the result
// is the same whether restarts run serially or in parallel.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "wbcbench/apportion.hpp"
#include "wbcbench/csv.hpp"
#include "wbcbench/error.hpp"
#include "wbcbench/manifest.hpp"
#include "wbcbench/random.hpp"
#include "wbcbench/taxonomy.hpp"

namespace wbcbench {

struct PatientProfile {
  std::string patient_id;
  ClassCounts class_counts{};

  [[nodiscard]] std::int64_t total() const noexcept {
    return std::accumulate(class_counts.begin(), class_counts.end(), std::int64_t{0});
  }
};

using SplitFractions = std::array<double, kNumSplits>;

/// Patient proportions per split, in SplitName order.
inline constexpr SplitFractions kDefaultPatientFractions{0.15, 0.45, 0.10, 0.30};

struct SplitTargets {
  SplitFractions patient_fraction = kDefaultPatientFractions;
  double rarity_exponent = 1.0;
  int restarts = 64;
};

struct SplitPlan {
  std::map<std::string, SplitName> assignment;
  std::array<ClassCounts, kNumSplits> per_split_class_counts{};
  std::array<std::int64_t, kNumSplits> patients_per_split{};
  double objective_score = 0.0;
  std::uint64_t seed = 0;
  /// Restart that produced the plan.
  int best_restart = 0;
  /// Classes too concentrated to reach every non-empty split.
  std::vector<std::string> warnings;

  [[nodiscard]] std::array<std::int64_t, kNumSplits> images_per_split() const noexcept {
    std::array<std::int64_t, kNumSplits> out{};
    for (std::size_t s = 0; s < kNumSplits; ++s) {
      out[s] = std::accumulate(per_split_class_counts[s].begin(), per_split_class_counts[s].end(), std::int64_t{0});
    }
    return out;
  }
};

namespace detail {

struct SplitProblem {
  std::size_t patients = 0;
  std::vector<std::array<double, kNumClasses>> share;  // n(p,c) / n(c)
  std::array<double, kNumClasses> weight{};
  SplitFractions target{};
  std::array<std::int64_t, kNumSplits> capacity{};
  std::vector<double> rarity_key;
};

struct Partition {
  std::vector<std::uint8_t> split_of;
  std::array<std::array<double, kNumClasses>, kNumSplits> share{};
  double score = 0.0;
};

inline double score_of(const SplitProblem& pb, const std::array<std::array<double, kNumClasses>, kNumSplits>& share) {
  double total = 0.0;
  for (std::size_t s = 0; s < kNumSplits; ++s) {
    for (std::size_t c = 0; c < kNumClasses; ++c) total += pb.weight[c] * std::abs(share[s][c] - pb.target[s]);
  }
  return total;
}

inline double move_delta(const SplitProblem& pb, const std::array<double, kNumClasses>& cur, std::size_t s,
                         const std::array<double, kNumClasses>& delta) {
  double d = 0.0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (delta[c] == 0.0) continue;
    d += pb.weight[c] * (std::abs(cur[c] + delta[c] - pb.target[s]) - std::abs(cur[c] - pb.target[s]));
  }
  return d;
}

inline Partition greedy_pass(const SplitProblem& pb, const std::vector<std::size_t>& order) {
  Partition part;
  part.split_of.assign(pb.patients, 0);
  std::array<std::int64_t, kNumSplits> used{};
  for (std::size_t p : order) {
    int best = -1;
    double best_gain = 0.0;
    for (std::size_t s = 0; s < kNumSplits; ++s) {
      if (used[s] >= pb.capacity[s]) continue;
      // Objective decrease from placing p in s; the weighted deficit p fills.
      const double gain = -move_delta(pb, part.share[s], s, pb.share[p]);
      if (best < 0 || gain > best_gain) {
        best = static_cast<int>(s);
        best_gain = gain;
      }
    }
    const auto s = static_cast<std::size_t>(best);
    part.split_of[p] = static_cast<std::uint8_t>(s);
    ++used[s];
    for (std::size_t c = 0; c < kNumClasses; ++c) part.share[s][c] += pb.share[p][c];
  }
  part.score = score_of(pb, part.share);
  return part;
}

/// Pairwise-swap descent; swaps keep every split's patient count fixed.
inline void swap_descent(const SplitProblem& pb, Partition& part, int max_passes = 100) {
  constexpr double kImprovement = 1e-12;
  const std::size_t n = pb.patients;
  std::array<double, kNumClasses> diff{};
  std::array<double, kNumClasses> neg{};
  for (int pass = 0; pass < max_passes; ++pass) {
    bool improved = false;
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) {
        const std::size_t sa = part.split_of[a];
        const std::size_t sb = part.split_of[b];
        if (sa == sb) continue;
        bool same = true;
        for (std::size_t c = 0; c < kNumClasses; ++c) {
          diff[c] = pb.share[b][c] - pb.share[a][c];
          neg[c] = -diff[c];
          same = same && diff[c] == 0.0;
        }
        if (same) continue;
        const double d = move_delta(pb, part.share[sa], sa, diff) + move_delta(pb, part.share[sb], sb, neg);
        if (d < -kImprovement) {
          for (std::size_t c = 0; c < kNumClasses; ++c) {
            part.share[sa][c] += diff[c];
            part.share[sb][c] += neg[c];
          }
          std::swap(part.split_of[a], part.split_of[b]);
          improved = true;
        }
      }
    }
    if (!improved) break;
  }
  // Recompute from scratch so the reported score carries no accumulated drift.
  for (auto& row : part.share) row.fill(0.0);
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t c = 0; c < kNumClasses; ++c) part.share[part.split_of[p]][c] += pb.share[p][c];
  }
  part.score = score_of(pb, part.share);
}

inline Partition run_restart(const SplitProblem& pb, std::uint64_t seed, int restart) {
  std::vector<std::size_t> order(pb.patients);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> key = pb.rarity_key;
  if (restart > 0) {
    Stream rng(derive_seed(seed, static_cast<std::uint64_t>(restart)));
    for (auto& k : key) k *= 0.5 + rng.next_unit();
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key[a] > key[b]; });
  Partition part = greedy_pass(pb, order);
  swap_descent(pb, part);
  return part;
}

}  // namespace detail

inline void validate_targets(const SplitTargets& t) {
  require_fraction_vector(t.patient_fraction, "split fractions");
  if (!(t.rarity_exponent > 0.0)) throw ValidationError("rarity_exponent must be positive");
  if (t.restarts < 1) throw ValidationError("restarts must be at least 1");
}

/// Objective of an explicit assignment (`split_of[p]` per patient), as defined above.
inline double split_objective(std::span<const PatientProfile> patients, const SplitFractions& target,
                              double rarity_exponent, std::span<const SplitName> split_of) {
  ClassCounts totals{};
  for (const auto& p : patients) {
    for (std::size_t c = 0; c < kNumClasses; ++c) totals[c] += p.class_counts[c];
  }
  std::array<double, kNumClasses> weight{};
  double wsum = 0.0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (totals[c] > 0) {
      weight[c] = std::pow(static_cast<double>(totals[c]), -rarity_exponent);
      wsum += weight[c];
    }
  }
  std::array<ClassCounts, kNumSplits> counts{};
  for (std::size_t p = 0; p < patients.size(); ++p) {
    for (std::size_t c = 0; c < kNumClasses; ++c) counts[index_of(split_of[p])][c] += patients[p].class_counts[c];
  }
  double score = 0.0;
  for (std::size_t s = 0; s < kNumSplits; ++s) {
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      if (totals[c] == 0) continue;
      const double share = static_cast<double>(counts[s][c]) / static_cast<double>(totals[c]);
      score += weight[c] / wsum * std::abs(share - target[s]);
    }
  }
  return score;
}

inline SplitPlan plan_split(std::span<const PatientProfile> patients, const SplitTargets& targets, std::uint64_t seed,
                            unsigned workers = 1) {
  validate_targets(targets);
  if (patients.empty()) throw ValidationError("no patients to split");
  const std::size_t nonzero =
      static_cast<std::size_t>(std::count_if(targets.patient_fraction.begin(), targets.patient_fraction.end(),
                                             [](double f) { return f > 0.0; }));
  if (patients.size() < nonzero) {
    throw ValidationError("fewer patients (" + std::to_string(patients.size()) + ") than splits with nonzero fraction (" +
                          std::to_string(nonzero) + ")");
  }

  ClassCounts totals{};
  std::unordered_map<std::string, std::size_t> seen;
  for (const auto& p : patients) {
    if (!seen.emplace(p.patient_id, 0).second) throw ValidationError("duplicate patient_id '" + p.patient_id + "'");
    if (p.total() < 1) throw ValidationError("patient '" + p.patient_id + "' has no images");
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      if (p.class_counts[c] < 0) throw ValidationError("negative class count for patient '" + p.patient_id + "'");
      totals[c] += p.class_counts[c];
    }
  }

  detail::SplitProblem pb;
  pb.patients = patients.size();
  pb.target = targets.patient_fraction;
  const auto cap = largest_remainder(targets.patient_fraction, static_cast<std::int64_t>(patients.size()));
  std::copy(cap.begin(), cap.end(), pb.capacity.begin());
  double wsum = 0.0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (totals[c] > 0) {
      pb.weight[c] = std::pow(static_cast<double>(totals[c]), -targets.rarity_exponent);
      wsum += pb.weight[c];
    }
  }
  for (auto& w : pb.weight) w /= wsum;
  pb.share.resize(patients.size());
  pb.rarity_key.resize(patients.size());
  for (std::size_t p = 0; p < patients.size(); ++p) {
    double key = 0.0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      pb.share[p][c] = totals[c] > 0 ? static_cast<double>(patients[p].class_counts[c]) / static_cast<double>(totals[c]) : 0.0;
      key = std::max(key, pb.weight[c] * pb.share[p][c]);
    }
    pb.rarity_key[p] = key;
  }

  const int restarts = targets.restarts;
  std::vector<detail::Partition> results(static_cast<std::size_t>(restarts));
  const unsigned threads = std::max(1u, std::min(workers, static_cast<unsigned>(restarts)));
  if (threads == 1) {
    for (int r = 0; r < restarts; ++r) results[static_cast<std::size_t>(r)] = detail::run_restart(pb, seed, r);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (int r = static_cast<int>(t); r < restarts; r += static_cast<int>(threads)) {
          results[static_cast<std::size_t>(r)] = detail::run_restart(pb, seed, r);
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  std::size_t best = 0;
  for (std::size_t r = 1; r < results.size(); ++r) {
    if (results[r].score < results[best].score) best = r;
  }

  SplitPlan plan;
  plan.seed = seed;
  plan.best_restart = static_cast<int>(best);
  plan.objective_score = results[best].score;
  for (std::size_t p = 0; p < patients.size(); ++p) {
    const auto s = static_cast<std::size_t>(results[best].split_of[p]);
    plan.assignment.emplace(patients[p].patient_id, kAllSplits[s]);
    ++plan.patients_per_split[s];
    for (std::size_t c = 0; c < kNumClasses; ++c) plan.per_split_class_counts[s][c] += patients[p].class_counts[c];
  }

  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (totals[c] == 0) continue;
    std::size_t holders = 0;
    for (const auto& p : patients) holders += p.class_counts[c] > 0 ? 1 : 0;
    if (holders < nonzero) {
      plan.warnings.push_back("class " + std::string(kClassCodes[c]) + " is held by " + std::to_string(holders) +
                              " patient(s) and cannot cover all " + std::to_string(nonzero) + " splits");
    }
  }
  return plan;
}

/// Aggregates a manifest into per-patient class tallies, in first-appearance order.
inline std::vector<PatientProfile> profiles_from_manifest(const Manifest& m) {
  std::vector<PatientProfile> out;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& r : m.records) {
    auto [it, inserted] = index.emplace(r.patient_id, out.size());
    if (inserted) out.push_back(PatientProfile{r.patient_id, {}});
    ++out[it->second].class_counts[index_of(r.label)];
  }
  return out;
}

/// Long-form roster: header `patient_id,label,count`, one row per (patient, class).
inline std::vector<PatientProfile> parse_patients_csv(const std::filesystem::path& path) {
  const auto rows = csv::read_file(path);
  if (rows.empty()) throw ValidationError(path.string() + ": missing header");
  if (rows.front().fields != std::vector<std::string>{"patient_id", "label", "count"}) {
    throw ValidationError(csv::line_prefix(path, rows.front().line) + "header must be patient_id,label,count");
  }
  std::vector<PatientProfile> out;
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const auto& row = rows[k];
    const auto where = csv::line_prefix(path, row.line);
    if (row.fields.size() != 3) throw ValidationError(where + "malformed row: expected 3 fields");
    const auto& f = row.fields;
    if (!csv::is_plain_token(f[0])) throw ValidationError(where + "malformed row: invalid patient_id");
    const auto label = parse_class_label(f[1]);
    if (!label) throw ValidationError(where + "unknown label '" + f[1] + "'");
    std::int64_t count = 0;
    try {
      std::size_t used = 0;
      count = std::stoll(f[2], &used);
      if (used != f[2].size() || count < 0) throw std::invalid_argument("count");
    } catch (const std::exception&) {
      throw ValidationError(where + "malformed row: invalid count '" + f[2] + "'");
    }
    auto [it, inserted] = index.emplace(f[0], out.size());
    if (inserted) out.push_back(PatientProfile{f[0], {}});
    out[it->second].class_counts[index_of(*label)] += count;
  }
  return out;
}

inline std::string format_plan_csv(const SplitPlan& plan) {
  std::string out = "patient_id,split\n";
  for (const auto& [pid, split] : plan.assignment) {
    out += pid;
    out += ',';
    out += to_string(split);
    out += '\n';
  }
  return out;
}

inline SplitPlan parse_plan_csv(const std::filesystem::path& path) {
  const auto rows = csv::read_file(path);
  if (rows.empty() || rows.front().fields != std::vector<std::string>{"patient_id", "split"}) {
    throw ValidationError(path.string() + ": header must be patient_id,split");
  }
  SplitPlan plan;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const auto& row = rows[k];
    const auto where = csv::line_prefix(path, row.line);
    if (row.fields.size() != 2) throw ValidationError(where + "malformed row: expected 2 fields");
    const auto split = parse_split(row.fields[1]);
    if (!split) throw ValidationError(where + "unknown split '" + row.fields[1] + "'");
    if (!plan.assignment.emplace(row.fields[0], *split).second) {
      throw ValidationError(where + "patient '" + row.fields[0] + "' assigned twice");
    }
    ++plan.patients_per_split[index_of(*split)];
  }
  return plan;
}

inline nlohmann::ordered_json plan_stats_json(const SplitPlan& plan) {
  nlohmann::ordered_json j;
  j["seed"] = plan.seed;
  j["objective_score"] = plan.objective_score;
  j["best_restart"] = plan.best_restart;
  const auto images = plan.images_per_split();
  for (std::size_t s = 0; s < kNumSplits; ++s) {
    nlohmann::ordered_json block;
    block["patients"] = plan.patients_per_split[s];
    block["images"] = images[s];
    nlohmann::ordered_json classes;
    for (std::size_t c = 0; c < kNumClasses; ++c) classes[std::string(kClassCodes[c])] = plan.per_split_class_counts[s][c];
    block["class_counts"] = classes;
    j["splits"][std::string(kSplitTokens[s])] = block;
  }
  j["warnings"] = plan.warnings;
  return j;
}

/// Copies `m` with every record's split tag set from the plan.
inline Manifest tag_with_splits(const Manifest& m, const SplitPlan& plan) {
  Manifest out = m;
  for (auto& r : out.records) {
    auto it = plan.assignment.find(r.patient_id);
    if (it == plan.assignment.end()) throw ValidationError("patient '" + r.patient_id + "' missing from split plan");
    r.split = it->second;
  }
  return out;
}

struct DisjointnessViolation {
  std::string image_id;
  std::string patient_id;
  SplitName tagged;
  SplitName planned;
};

struct DisjointnessReport {
  std::vector<DisjointnessViolation> violations;
  [[nodiscard]] bool ok() const noexcept { return violations.empty(); }
};

/// Every image's split tag must match its patient's planned split. A patient
/// whose images carry two different tags necessarily produces a violation.
inline DisjointnessReport check_disjointness(const SplitPlan& plan, const Manifest& m) {
  DisjointnessReport report;
  for (const auto& r : m.records) {
    auto it = plan.assignment.find(r.patient_id);
    if (it == plan.assignment.end()) throw ValidationError("unknown patient_id '" + r.patient_id + "'");
    if (r.split && *r.split != it->second) {
      report.violations.push_back(DisjointnessViolation{r.image_id, r.patient_id, *r.split, it->second});
    }
  }
  return report;
}

}  // namespace wbcbench
