#pragma once

// Degradation recipes: sampling, validation, application, JSON.
//
// A recipe is the complete, ordered list of operators applied to one image
// with every sampled value written down. Sampling draws from
// derive(image_seed, 0); step i gets its own application stream
// derive(image_seed, i + 1), used only by the noise operators.

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "wbcbench/degradation_config.hpp"
#include "wbcbench/error.hpp"
#include "wbcbench/image.hpp"
#include "wbcbench/operators.hpp"
#include "wbcbench/random.hpp"
#include "wbcbench/taxonomy.hpp"

namespace wbcbench {

using NamedValues = std::vector<std::pair<std::string, double>>;

struct RecipeStep {
  OperatorKind op = OperatorKind::Gamma;
  /// Sampled parameters, each drawn from its configured interval.
  NamedValues params;
  /// Outcomes decided at sampling time: Bernoulli draws, crop offsets, rounded kernel sizes.
  NamedValues realized;
  /// Application stream for the noise operators; zero otherwise.
  std::uint64_t stream = 0;

  [[nodiscard]] double param(std::string_view key) const { return lookup(params, key); }
  [[nodiscard]] double outcome(std::string_view key) const { return lookup(realized, key); }

  bool operator==(const RecipeStep&) const = default;

 private:
  static double lookup(const NamedValues& values, std::string_view key) {
    for (const auto& [k, v] : values) {
      if (k == key) return v;
    }
    throw ValidationError("recipe step is missing value '" + std::string(key) + "'");
  }
};

struct DegradationRecipe {
  std::string image_id;
  Severity severity = Severity::Pristine;
  std::uint64_t seed = 0;
  std::vector<RecipeStep> steps;

  bool operator==(const DegradationRecipe&) const = default;
};

inline std::uint64_t image_seed(std::uint64_t global_seed, std::string_view image_id) noexcept {
  return derive_seed(global_seed, image_id);
}

inline constexpr std::array<std::string_view, 3> kChannelSuffix{"r", "g", "b"};

namespace detail {

inline RecipeStep sample_step(OperatorKind op, Severity sev, const ParamRanges& ranges, Stream& rng) {
  RecipeStep step;
  step.op = op;
  auto draw = [&](Param p) {
    const auto& iv = ranges.at(sev, p);
    const double v = rng.uniform(iv.lo, iv.hi);
    step.params.emplace_back(std::string(param_name(p)), v);
    return v;
  };
  switch (op) {
    case OperatorKind::Crop:
      draw(Param::CropRatio);
      step.realized.emplace_back("offset_x", rng.next_unit());
      step.realized.emplace_back("offset_y", rng.next_unit());
      break;
    case OperatorKind::GaussianBlur:
      draw(Param::BlurSigma);
      break;
    case OperatorKind::MotionBlur: {
      const double k = draw(Param::MotionKernel);
      const double p = draw(Param::MotionProb);
      draw(Param::MotionAngle);
      step.realized.emplace_back("kernel_size", static_cast<double>(ops::odd_kernel_size(k)));
      step.realized.emplace_back("applied", rng.bernoulli(p) ? 1.0 : 0.0);
      break;
    }
    case OperatorKind::GaussianNoise:
      draw(Param::NoiseStd);
      break;
    case OperatorKind::PoissonNoise:
      draw(Param::PoissonRate);
      break;
    case OperatorKind::Saturation:
      draw(Param::SaturationDelta);
      break;
    case OperatorKind::Gamma:
      draw(Param::Gamma);
      break;
    case OperatorKind::Brightness:
      draw(Param::BrightnessDelta);
      break;
    case OperatorKind::Vignetting:
      draw(Param::VignetteStrength);
      break;
    case OperatorKind::ColorJitter: {
      const double p = draw(Param::JitterProb);
      const auto& iv = ranges.at(sev, Param::JitterFactor);
      for (auto ch : kChannelSuffix) {
        step.params.emplace_back("factor_" + std::string(ch), rng.uniform(iv.lo, iv.hi));
      }
      for (auto ch : kChannelSuffix) step.realized.emplace_back("applied_" + std::string(ch), rng.bernoulli(p) ? 1.0 : 0.0);
      break;
    }
  }
  return step;
}

}  // namespace detail

/// Draws the operator count uniformly from the severity's interval, the
/// operators uniformly without replacement (application order = draw order),
/// and every parameter uniformly from its interval. Pristine yields no steps.
inline DegradationRecipe sample_recipe(std::string image_id, Severity severity, const DegradationConfig& cfg,
                                       std::uint64_t seed) {
  DegradationRecipe recipe{std::move(image_id), severity, seed, {}};
  if (severity == Severity::Pristine) return recipe;
  Stream rng(derive_seed(seed, std::uint64_t{0}));
  const auto& count = cfg.counts.at(severity);
  const auto n = static_cast<std::size_t>(rng.uniform_int(count.lo, count.hi));
  std::array<OperatorKind, kNumOperators> pool{};
  for (std::size_t i = 0; i < kNumOperators; ++i) pool[i] = static_cast<OperatorKind>(i);
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(kNumOperators - i));
    std::swap(pool[i], pool[j]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    RecipeStep step = detail::sample_step(pool[i], severity, cfg.ranges, rng);
    if (pool[i] == OperatorKind::GaussianNoise || pool[i] == OperatorKind::PoissonNoise) {
      step.stream = derive_seed(seed, static_cast<std::uint64_t>(i + 1));
    }
    recipe.steps.push_back(std::move(step));
  }
  return recipe;
}

/// Checks step count, operator uniqueness and parameter containment against `cfg`.
inline void validate_recipe(const DegradationRecipe& recipe, const DegradationConfig& cfg) {
  const std::string who = "recipe for '" + recipe.image_id + "': ";
  if (recipe.severity == Severity::Pristine) {
    if (!recipe.steps.empty()) throw ValidationError(who + "pristine recipe must be empty");
    return;
  }
  const auto& count = cfg.counts.at(recipe.severity);
  const auto n = static_cast<int>(recipe.steps.size());
  if (n < count.lo || n > count.hi) throw ValidationError(who + "step count " + std::to_string(n) + " outside interval");
  std::array<bool, kNumOperators> seen{};
  for (const auto& step : recipe.steps) {
    if (seen[index_of(step.op)]) throw ValidationError(who + "operator " + std::string(to_string(step.op)) + " repeated");
    seen[index_of(step.op)] = true;
    for (const auto& [key, value] : step.params) {
      std::string_view base = key;
      if (step.op == OperatorKind::ColorJitter && base.starts_with("factor_")) base = "factor";
      const auto param = find_param(step.op, base);
      if (!param) throw ValidationError(who + "unknown parameter '" + key + "'");
      if (!cfg.ranges.at(recipe.severity, *param).contains(value)) {
        throw ValidationError(who + std::string(to_string(step.op)) + "." + key + " = " + std::to_string(value) +
                              " outside its interval");
      }
    }
  }
}

inline Image apply_operator(const RecipeStep& step, const Image& in) {
  switch (step.op) {
    case OperatorKind::Crop:
      return ops::crop(in, step.param("ratio"), step.outcome("offset_x"), step.outcome("offset_y"));
    case OperatorKind::GaussianBlur:
      return ops::gaussian_blur(in, step.param("sigma"));
    case OperatorKind::MotionBlur:
      if (step.outcome("applied") == 0.0) return in;
      return ops::motion_blur(in, static_cast<int>(step.outcome("kernel_size")), step.param("angle"));
    case OperatorKind::GaussianNoise:
      return ops::gaussian_noise(in, step.param("std"), Stream(step.stream));
    case OperatorKind::PoissonNoise:
      return ops::poisson_noise(in, step.param("rate"), Stream(step.stream));
    case OperatorKind::Saturation:
      return ops::saturation(in, step.param("delta_s"));
    case OperatorKind::Gamma:
      return ops::gamma(in, step.param("gamma"));
    case OperatorKind::Brightness:
      return ops::brightness(in, step.param("delta_i"));
    case OperatorKind::Vignetting:
      return ops::vignetting(in, step.param("strength"));
    case OperatorKind::ColorJitter: {
      std::array<double, 3> factors{};
      std::array<bool, 3> applied{};
      for (std::size_t c = 0; c < 3; ++c) {
        factors[c] = step.param("factor_" + std::string(kChannelSuffix[c]));
        applied[c] = step.outcome("applied_" + std::string(kChannelSuffix[c])) != 0.0;
      }
      return ops::color_jitter(in, factors, applied);
    }
  }
  throw ValidationError("unknown operator");
}

/// Applies the steps in order. Pure in (image, recipe).
inline Image apply_recipe(const Image& image, const DegradationRecipe& recipe) {
  Image current = image;
  for (const auto& step : recipe.steps) current = apply_operator(step, current);
  return current;
}

/// As above, first checking the raster against the configured square side.
inline Image apply_recipe(const Image& image, const DegradationRecipe& recipe, const DegradationConfig& cfg) {
  if (image.width() != cfg.image_side || image.height() != cfg.image_side) {
    throw ValidationError("image '" + recipe.image_id + "' is " + std::to_string(image.width()) + "x" +
                          std::to_string(image.height()) + ", expected " + std::to_string(cfg.image_side) + "x" +
                          std::to_string(cfg.image_side));
  }
  return apply_recipe(image, recipe);
}

inline nlohmann::ordered_json to_json(const DegradationRecipe& r) {
  nlohmann::ordered_json j;
  j["image_id"] = r.image_id;
  j["severity"] = std::string(to_string(r.severity));
  j["seed"] = r.seed;
  j["steps"] = nlohmann::ordered_json::array();
  for (const auto& s : r.steps) {
    nlohmann::ordered_json step;
    step["op"] = std::string(to_string(s.op));
    step["params"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : s.params) step["params"][k] = v;
    step["realized"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : s.realized) step["realized"][k] = v;
    if (s.stream != 0) step["realized"]["stream"] = s.stream;
    j["steps"].push_back(std::move(step));
  }
  return j;
}

inline DegradationRecipe recipe_from_json(const nlohmann::ordered_json& j) {
  try {
    DegradationRecipe r;
    r.image_id = j.at("image_id").get<std::string>();
    r.severity = require_severity(j.at("severity").get<std::string>());
    r.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& s : j.at("steps")) {
      RecipeStep step;
      const auto op = parse_operator(s.at("op").get<std::string>());
      if (!op) throw ValidationError("unknown operator in recipe");
      step.op = *op;
      for (const auto& [k, v] : s.at("params").items()) step.params.emplace_back(k, v.get<double>());
      for (const auto& [k, v] : s.at("realized").items()) {
        if (k == "stream") step.stream = v.get<std::uint64_t>();
        else step.realized.emplace_back(k, v.get<double>());
      }
      r.steps.push_back(std::move(step));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed recipe: ") + e.what());
  }
}

}  // namespace wbcbench
