#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "wbcbench/error.hpp"

namespace wbcbench {

/// Tolerance for "fractions sum to one".
inline constexpr double kFractionSumTolerance = 1e-9;

inline void require_fraction_vector(std::span<const double> fractions, const char* what) {
  double sum = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0 && f <= 1.0)) throw ValidationError(std::string(what) + ": fraction outside [0,1]");
    sum += f;
  }
  if (std::abs(sum - 1.0) > kFractionSumTolerance) {
    throw ValidationError(std::string(what) + ": fractions sum to " + std::to_string(sum) + ", expected 1");
  }
}

/// Largest-remainder (Hamilton) apportionment of `total` over `fractions`.
///
/// Each slot receives floor(f * total); the leftover units go to the largest
/// fractional remainders, lower index first on ties. Products within 1e-9 of an
/// integer are snapped so that 0.1 * 490 is 49 rather than 48.999...
inline std::vector<std::int64_t> largest_remainder(std::span<const double> fractions, std::int64_t total) {
  const std::size_t n = fractions.size();
  std::vector<std::int64_t> quota(n, 0);
  std::vector<double> remainder(n, 0.0);
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double exact = fractions[i] * static_cast<double>(total);
    const double floored = std::floor(exact + 1e-9);
    quota[i] = static_cast<std::int64_t>(floored);
    remainder[i] = std::max(0.0, exact - floored);
    assigned += quota[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  std::int64_t left = total - assigned;
  if (std::none_of(fractions.begin(), fractions.end(), [](double f) { return f > 0.0; })) return quota;
  // Snapping can overshoot by a unit when the fractions sum a hair above one.
  for (std::size_t k = n; left < 0 && k > 0; --k) {
    if (quota[order[k - 1]] > 0) {
      --quota[order[k - 1]];
      ++left;
    }
  }
  for (std::size_t k = 0; left > 0; k = (k + 1) % n) {
    // Zero-fraction slots never receive leftovers.
    if (fractions[order[k]] > 0.0) {
      ++quota[order[k]];
      --left;
    }
  }
  return quota;
}

}  // namespace wbcbench
