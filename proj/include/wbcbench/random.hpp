#pragma once

// Counter-based random streams.
//
// Every random decision in the toolkit is drawn from a `Stream`, a SplitMix64
// sequence: the n-th output of a stream with key k is mix64(k + n * gamma),
// where gamma is the 64-bit golden ratio and mix64 is the SplitMix64
// finalizer. Streams never share state, so work can be scheduled in any order
// on any number of threads without changing a single bit of output.
//
// Derivation:
//   derive(key, tag)           = mix64(key ^ mix64(tag + gamma))
//   derive(key, "text")        = derive(key, fnv1a64("text"))
//   image stream               = derive(global_seed, image_id)
//   recipe sampling stream     = derive(image_stream, 0)
//   step i application stream  = derive(image_stream, i + 1)
//
// Distributions are implemented here rather than taken from <random>, whose
// distribution algorithms are implementation-defined.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace wbcbench {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t key, std::uint64_t tag) noexcept {
  return mix64(key ^ mix64(tag + kGoldenGamma));
}

constexpr std::uint64_t derive_seed(std::uint64_t key, std::string_view tag) noexcept {
  return derive_seed(key, fnv1a64(tag));
}

class Stream {
 public:
  explicit constexpr Stream(std::uint64_t key) noexcept : key_(key) {}

  constexpr std::uint64_t next_u64() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * kGoldenGamma);
  }

  /// Uniform in [0, 1) with 53 random bits.
  constexpr double next_unit() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform real in [lo, hi]; returns lo when the interval is degenerate.
  constexpr double uniform(double lo, double hi) noexcept {
    if (!(hi > lo)) return lo;
    const double v = lo + (hi - lo) * next_unit();
    return v > hi ? hi : v;
  }

  /// Uniform integer in [0, bound) by rejection; bound must be > 0.
  constexpr std::uint64_t below(std::uint64_t bound) noexcept {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (true) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  /// Uniform integer in [lo, hi] inclusive.
  constexpr std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) noexcept {
    if (hi <= lo) return lo;
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  constexpr bool bernoulli(double p) noexcept { return next_unit() < p; }

  /// Standard normal pair via Box-Muller.
  std::pair<double, double> normal_pair() noexcept {
    double u1 = next_unit();
    while (u1 <= 0.0) u1 = next_unit();
    const double u2 = next_unit();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(theta), radius * std::sin(theta)};
  }

  [[nodiscard]] constexpr std::uint64_t key() const noexcept { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Fisher-Yates, highest index first.
template <typename T>
void shuffle(std::span<T> items, Stream& rng) noexcept {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(items[i - 1], items[j]);
  }
}

template <typename T>
void shuffle(std::vector<T>& items, Stream& rng) noexcept {
  shuffle(std::span<T>(items), rng);
}

}  // namespace wbcbench
