#pragma once

// Synthetic stand-in data for exercising the pipeline end to end. The
// patches are procedurally drawn (a textured disc with a class-coded hue and
// nucleus shape on a noisy background) and carry no biological meaning.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "wbcbench/apportion.hpp"
#include "wbcbench/error.hpp"
#include "wbcbench/image.hpp"
#include "wbcbench/manifest.hpp"
#include "wbcbench/png.hpp"
#include "wbcbench/random.hpp"
#include "wbcbench/taxonomy.hpp"

namespace wbcbench {

/// Long-tailed default mixture: test-split support per class (class order).
inline constexpr std::array<double, kNumClasses> kDefaultClassMixture{
    8188, 138, 492, 303, 4269, 1508, 175, 184, 48, 902, 253, 15, 2};

struct SynthOptions {
  int patients = 40;
  std::int64_t images = 800;
  std::array<double, kNumClasses> mixture = kDefaultClassMixture;
  std::uint64_t seed = 0;
  int side = kDefaultImageSide;
};

/// Parses "SNE=8188,LY=4269,..."; unspecified classes get weight 0.
inline std::array<double, kNumClasses> parse_mixture(const std::string& text) {
  std::array<double, kNumClasses> mix{};
  for (const auto& item : csv::split_fields(text)) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ValidationError("mixture entry '" + item + "' is not CODE=weight");
    const auto label = parse_class_label(item.substr(0, eq));
    if (!label) throw ValidationError("unknown class in mixture: '" + item.substr(0, eq) + "'");
    try {
      std::size_t used = 0;
      const auto value_text = item.substr(eq + 1);
      const double w = std::stod(value_text, &used);
      if (used != value_text.size() || !(w >= 0.0)) throw std::invalid_argument("bad weight");
      mix[index_of(*label)] = w;
    } catch (const std::exception&) {
      throw ValidationError("invalid weight in mixture entry '" + item + "'");
    }
  }
  return mix;
}

inline void validate(const SynthOptions& opt) {
  if (opt.patients < 4) throw ValidationError("synthetic data needs at least 4 patients");
  if (opt.images < opt.patients) throw ValidationError("synthetic data needs at least one image per patient");
  if (opt.side < 8) throw ValidationError("synthetic image side must be at least 8");
  double sum = 0.0;
  for (double w : opt.mixture) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("mixture weights must be finite and non-negative");
    sum += w;
  }
  if (!(sum > 0.0)) throw ValidationError("mixture has no positive weight");
}

/// Images per class: largest-remainder apportionment of the normalised mixture.
inline ClassCounts synth_class_counts(const SynthOptions& opt) {
  std::array<double, kNumClasses> f{};
  double sum = 0.0;
  for (double w : opt.mixture) sum += w;
  for (std::size_t c = 0; c < kNumClasses; ++c) f[c] = opt.mixture[c] / sum;
  const auto q = largest_remainder(f, opt.images);
  ClassCounts out{};
  std::copy(q.begin(), q.end(), out.begin());
  return out;
}

/// Builds the manifest only. Rare classes concentrate in a subset of
/// "abnormal" patients, so class profiles are correlated within patients.
inline Manifest synth_manifest(const SynthOptions& opt) {
  validate(opt);
  const auto counts = synth_class_counts(opt);
  const auto P = static_cast<std::size_t>(opt.patients);
  Stream rng(derive_seed(opt.seed, "synth-manifest"));

  std::vector<std::size_t> abnormal, normal;
  for (std::size_t p = 0; p < P; ++p) (rng.bernoulli(0.3) ? abnormal : normal).push_back(p);
  std::vector<double> weight(P);
  for (auto& w : weight) w = 0.5 + rng.next_unit();

  std::vector<std::pair<std::size_t, std::size_t>> draws;  // (class, patient)
  // Most common class first so the forced one-image-per-patient pass uses it.
  std::array<std::size_t, kNumClasses> order{};
  for (std::size_t c = 0; c < kNumClasses; ++c) order[c] = c;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return counts[a] > counts[b]; });

  const double total = static_cast<double>(opt.images);
  std::size_t forced = 0;
  for (std::size_t c : order) {
    if (counts[c] == 0) continue;
    const double share = static_cast<double>(counts[c]) / total;
    const auto k = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::lround(static_cast<double>(P) * std::min(1.0, 3.0 * std::sqrt(share)))), 1, P);
    auto ab = abnormal;
    auto no = normal;
    shuffle(ab, rng);
    shuffle(no, rng);
    std::vector<std::size_t> carriers;
    const bool rare = share < 0.05;
    for (auto* group : rare ? std::array{&ab, &no} : std::array{&no, &ab}) {
      for (auto p : *group) {
        if (carriers.size() < k) carriers.push_back(p);
      }
    }
    double wsum = 0.0;
    for (auto p : carriers) wsum += weight[p];
    for (std::int64_t i = 0; i < counts[c]; ++i) {
      std::size_t patient = 0;
      if (forced < P) {
        patient = forced++;
      } else {
        double u = rng.next_unit() * wsum;
        patient = carriers.back();
        for (auto p : carriers) {
          if (u < weight[p]) {
            patient = p;
            break;
          }
          u -= weight[p];
        }
      }
      draws.emplace_back(c, patient);
    }
  }
  shuffle(draws, rng);

  Manifest m;
  m.records.reserve(draws.size());
  char id[32];
  char pid[32];
  for (std::size_t i = 0; i < draws.size(); ++i) {
    std::snprintf(id, sizeof id, "img_%06zu", i + 1);
    std::snprintf(pid, sizeof pid, "P%04zu", draws[i].second + 1);
    m.records.push_back(make_record(id, pid, kAllClasses[draws[i].first]));
  }
  return m;
}

/// Deterministic patch for one image: background, a few pale discs, and a
/// central cell whose hue, radius and nucleus lobe count depend on the class.
inline Image synth_image(ClassLabel label, std::uint64_t seed, int side) {
  Stream rng(seed);
  const auto c = static_cast<double>(index_of(label));
  const double s = side;
  Image img(side, side);

  struct Disc {
    double x, y, r;
  };
  std::vector<Disc> pale;
  for (int i = 0; i < 6; ++i) pale.push_back({rng.uniform(0, s), rng.uniform(0, s), rng.uniform(0.08, 0.14) * s});

  const double hue = 2.0 * std::numbers::pi * c / kNumClasses;
  const double cell_r = (0.22 + 0.012 * c) * s;
  const int lobes = 1 + static_cast<int>(index_of(label) % 5);
  const double cx = s / 2 + rng.uniform(-0.03, 0.03) * s;
  const double cy = s / 2 + rng.uniform(-0.03, 0.03) * s;
  const double phase = rng.uniform(0, 2 * std::numbers::pi);
  const double nuc_r = cell_r * (0.45 + 0.02 * (lobes - 1));
  const std::array<double, 3> tint{150 + 60 * std::cos(hue), 90 + 50 * std::cos(hue + 2.1), 170 + 50 * std::cos(hue + 4.2)};

  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      std::array<double, 3> px{228, 206, 214};
      for (const auto& d : pale) {
        const double dd = std::hypot(x - d.x, y - d.y);
        if (dd < d.r) px = {236 - 20 * dd / d.r, 170 + 10 * dd / d.r, 178};
      }
      const double dx = x - cx;
      const double dy = y - cy;
      const double r = std::hypot(dx, dy);
      if (r < cell_r) {
        px = {200 + 0.2 * tint[0], 185 + 0.1 * tint[1], 215 + 0.1 * tint[2]};
        const double angle = std::atan2(dy, dx);
        const double lobe_r = nuc_r * (1.0 + 0.25 * std::cos(lobes * angle + phase));
        if (r < lobe_r) {
          const double tex = 12.0 * std::sin(0.35 * x + phase) * std::cos(0.29 * y);
          px = {tint[0] * 0.7 + tex, tint[1] * 0.6 + tex, tint[2] * 0.9 + tex};
        }
      }
      for (int ch = 0; ch < 3; ++ch) img.at(x, y, ch) = quantize(px[static_cast<std::size_t>(ch)] + rng.uniform(-6, 6));
    }
  }
  return img;
}

/// Writes `<dir>/manifest.csv` and, unless `with_images` is false, `<dir>/images/<image_id>.png`.
inline Manifest write_synth_dataset(const SynthOptions& opt, const std::filesystem::path& dir, bool with_images = true) {
  Manifest m = synth_manifest(opt);
  write_manifest(m, dir / "manifest.csv");
  if (with_images) {
    for (const auto& r : m.records) {
      png::write(synth_image(r.label, derive_seed(opt.seed, r.image_id), opt.side), dir / "images" / r.source_path);
    }
  }
  return m;
}

}  // namespace wbcbench
