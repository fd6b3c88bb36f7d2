#pragma once

// Pixel operators. Each takes an 8-bit RGB image and returns a new one of the
// same size; arithmetic is in double precision and quantised once at the end
// of the operator.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "wbcbench/image.hpp"
#include "wbcbench/random.hpp"

namespace wbcbench::ops {

namespace detail {

/// Mirror index into [0, n) without repeating the edge sample (… 2 1 | 0 1 2 … n-1 | n-2 …).
inline int reflect(int i, int n) noexcept {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

inline Image map_lut(const Image& in, const std::array<std::uint8_t, 256>& lut) {
  Image out = in;
  for (auto& v : out.bytes()) v = lut[v];
  return out;
}

}  // namespace detail

/// Samples a `win_w` x `win_h` window at (`x0`, `y0`) and resamples it to the
/// full image size with bilinear interpolation (pixel-centre aligned).
inline Image crop_resample(const Image& in, int x0, int y0, int win_w, int win_h) {
  const int w = in.width();
  const int h = in.height();
  FloatImage out{w, h, std::vector<double>(static_cast<std::size_t>(w) * h * 3)};
  const double sx = static_cast<double>(win_w) / w;
  const double sy = static_cast<double>(win_h) / h;
  std::vector<int> xa(w), xb(w);
  std::vector<double> xf(w);
  for (int x = 0; x < w; ++x) {
    const double src = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(win_w - 1));
    xa[x] = static_cast<int>(std::floor(src));
    xb[x] = std::min(xa[x] + 1, win_w - 1);
    xf[x] = src - xa[x];
  }
  for (int y = 0; y < h; ++y) {
    const double src_y = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(win_h - 1));
    const int ya = static_cast<int>(std::floor(src_y));
    const int yb = std::min(ya + 1, win_h - 1);
    const double fy = src_y - ya;
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double top = (1.0 - xf[x]) * in.at(x0 + xa[x], y0 + ya, c) + xf[x] * in.at(x0 + xb[x], y0 + ya, c);
        const double bottom = (1.0 - xf[x]) * in.at(x0 + xa[x], y0 + yb, c) + xf[x] * in.at(x0 + xb[x], y0 + yb, c);
        out.at(x, y, c) = (1.0 - fy) * top + fy * bottom;
      }
    }
  }
  return to_image(out);
}

/// Removes a border of relative size `ratio`: the window side is
/// round((1 - ratio) * side) and its offset is floor(u * (side - window + 1)).
inline Image crop(const Image& in, double ratio, double offset_x_unit, double offset_y_unit) {
  const int win_w = std::clamp(static_cast<int>(std::lround((1.0 - ratio) * in.width())), 1, in.width());
  const int win_h = std::clamp(static_cast<int>(std::lround((1.0 - ratio) * in.height())), 1, in.height());
  const int x0 = std::min(static_cast<int>(offset_x_unit * (in.width() - win_w + 1)), in.width() - win_w);
  const int y0 = std::min(static_cast<int>(offset_y_unit * (in.height() - win_h + 1)), in.height() - win_h);
  return crop_resample(in, x0, y0, win_w, win_h);
}

inline std::vector<double> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-(i * i) / (2.0 * sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (auto& v : k) v /= sum;
  return k;
}

/// Separable Gaussian, radius ceil(3 sigma), reflect padding.
inline Image gaussian_blur(const Image& in, double sigma) {
  if (!(sigma > 0.0)) return in;
  const auto k = gaussian_kernel(sigma);
  const int radius = static_cast<int>(k.size() / 2);
  const int w = in.width();
  const int h = in.height();
  FloatImage src = FloatImage::from(in);
  FloatImage tmp{w, h, std::vector<double>(src.data.size())};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc[3] = {0, 0, 0};
      for (int i = -radius; i <= radius; ++i) {
        const int xs = detail::reflect(x + i, w);
        const double kv = k[static_cast<std::size_t>(i + radius)];
        for (int c = 0; c < 3; ++c) acc[c] += kv * src.at(xs, y, c);
      }
      for (int c = 0; c < 3; ++c) tmp.at(x, y, c) = acc[c];
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc[3] = {0, 0, 0};
      for (int i = -radius; i <= radius; ++i) {
        const int ys = detail::reflect(y + i, h);
        const double kv = k[static_cast<std::size_t>(i + radius)];
        for (int c = 0; c < 3; ++c) acc[c] += kv * tmp.at(x, ys, c);
      }
      for (int c = 0; c < 3; ++c) src.at(x, y, c) = acc[c];
    }
  }
  return to_image(src);
}

/// Rounds a sampled kernel length to the odd size covering it (2*floor(k/2)+1), at least 3.
inline int odd_kernel_size(double k) noexcept {
  const int size = 2 * static_cast<int>(std::floor(k / 2.0)) + 1;
  return std::max(3, size);
}

struct Tap {
  int dx;
  int dy;
  double weight;
};

/// Rasterised line of length `size` through the kernel centre at `angle_deg`
/// (counter-clockwise from +x, y pointing up), uniform weights summing to one.
inline std::vector<Tap> motion_kernel(int size, double angle_deg) {
  const int half = size / 2;
  const double theta = angle_deg * std::numbers::pi / 180.0;
  const double cx = std::cos(theta);
  const double sy = std::sin(theta);
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(size) * size, 0);
  const int samples = 4 * size;
  for (int i = 0; i <= samples; ++i) {
    const double t = -half + (2.0 * half) * i / samples;
    const int x = static_cast<int>(std::lround(t * cx)) + half;
    const int y = static_cast<int>(std::lround(-t * sy)) + half;
    if (x >= 0 && x < size && y >= 0 && y < size) mask[static_cast<std::size_t>(y) * size + x] = 1;
  }
  std::vector<Tap> taps;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      if (mask[static_cast<std::size_t>(y) * size + x]) taps.push_back(Tap{x - half, y - half, 0.0});
    }
  }
  for (auto& t : taps) t.weight = 1.0 / static_cast<double>(taps.size());
  return taps;
}

inline Image convolve_taps(const Image& in, const std::vector<Tap>& taps) {
  const int w = in.width();
  const int h = in.height();
  FloatImage out{w, h, std::vector<double>(static_cast<std::size_t>(w) * h * 3)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc[3] = {0, 0, 0};
      for (const auto& t : taps) {
        const int xs = detail::reflect(x + t.dx, w);
        const int ys = detail::reflect(y + t.dy, h);
        for (int c = 0; c < 3; ++c) acc[c] += t.weight * in.at(xs, ys, c);
      }
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = acc[c];
    }
  }
  return to_image(out);
}

inline Image motion_blur(const Image& in, int kernel_size, double angle_deg) {
  return convolve_taps(in, motion_kernel(kernel_size, angle_deg));
}

/// Additive i.i.d. N(0, std^2) per pixel and channel.
inline Image gaussian_noise(const Image& in, double std_dev, Stream rng) {
  Image out = in;
  auto bytes = out.bytes();
  for (std::size_t i = 0; i < bytes.size(); i += 2) {
    const auto [a, b] = rng.normal_pair();
    bytes[i] = quantize(static_cast<double>(bytes[i]) + std_dev * a);
    if (i + 1 < bytes.size()) bytes[i + 1] = quantize(static_cast<double>(bytes[i + 1]) + std_dev * b);
  }
  return out;
}

/// Inverse-CDF tables for Poisson(v / rate), one per 8-bit value v.
class PoissonTables {
 public:
  explicit PoissonTables(double rate) {
    for (int v = 0; v < 256; ++v) build(static_cast<std::size_t>(v), v / rate);
  }

  /// Draws Poisson(v / rate) from a uniform u in [0,1).
  [[nodiscard]] std::int64_t sample(std::uint8_t v, double u) const noexcept {
    const auto& cdf = cdf_[v];
    if (cdf.empty()) return 0;
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const auto idx = std::min<std::ptrdiff_t>(it - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1);
    return first_[v] + idx;
  }

 private:
  void build(std::size_t v, double mean) {
    if (mean <= 0.0) return;
    const double spread = 12.0 * std::sqrt(mean) + 12.0;
    const auto lo = static_cast<std::int64_t>(std::max(0.0, std::floor(mean - spread)));
    const auto hi = static_cast<std::int64_t>(std::ceil(mean + spread));
    std::vector<double> pmf;
    pmf.reserve(static_cast<std::size_t>(hi - lo + 1));
    double total = 0.0;
    for (std::int64_t k = lo; k <= hi; ++k) {
      const double kd = static_cast<double>(k);
      const double p = std::exp(kd * std::log(mean) - mean - std::lgamma(kd + 1.0));
      pmf.push_back(p);
      total += p;
    }
    double acc = 0.0;
    for (auto& p : pmf) {
      acc += p / total;
      p = acc;
    }
    first_[v] = lo;
    cdf_[v] = std::move(pmf);
  }

  std::array<std::vector<double>, 256> cdf_{};
  std::array<std::int64_t, 256> first_{};
};

/// out = rate * Poisson(in / rate): variance rate * in, so a larger rate is noisier.
inline Image poisson_noise(const Image& in, double rate, Stream rng) {
  const PoissonTables tables(rate);
  Image out = in;
  for (auto& v : out.bytes()) v = quantize(rate * static_cast<double>(tables.sample(v, rng.next_unit())));
  return out;
}

namespace detail {

struct Hsv {
  double h;  // [0, 6)
  double s;  // [0, 255]
  double v;  // [0, 255]
};

inline Hsv to_hsv(double r, double g, double b) noexcept {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double d = mx - mn;
  double h = 0.0;
  if (d > 0.0) {
    if (mx == r) h = std::fmod((g - b) / d + 6.0, 6.0);
    else if (mx == g) h = (b - r) / d + 2.0;
    else h = (r - g) / d + 4.0;
  }
  const double s = mx > 0.0 ? 255.0 * d / mx : 0.0;
  return {h, s, mx};
}

inline std::array<double, 3> to_rgb(const Hsv& hsv) noexcept {
  const double c = hsv.v * hsv.s / 255.0;
  const double x = c * (1.0 - std::abs(std::fmod(hsv.h, 2.0) - 1.0));
  const double m = hsv.v - c;
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(hsv.h) % 6) {
    case 0: r = c, g = x; break;
    case 1: r = x, g = c; break;
    case 2: g = c, b = x; break;
    case 3: g = x, b = c; break;
    case 4: r = x, b = c; break;
    default: r = c, b = x; break;
  }
  return {r + m, g + m, b + m};
}

}  // namespace detail

/// HSV saturation shift with S on a 0-255 scale.
inline Image saturation(const Image& in, double delta_s) {
  Image out = in;
  if (delta_s == 0.0) return out;
  for (int y = 0; y < in.height(); ++y) {
    for (int x = 0; x < in.width(); ++x) {
      auto hsv = detail::to_hsv(in.at(x, y, 0), in.at(x, y, 1), in.at(x, y, 2));
      hsv.s = std::clamp(hsv.s + delta_s, 0.0, 255.0);
      const auto rgb = detail::to_rgb(hsv);
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = quantize(rgb[static_cast<std::size_t>(c)]);
    }
  }
  return out;
}

inline Image gamma(const Image& in, double g) {
  std::array<std::uint8_t, 256> lut{};
  for (int v = 0; v < 256; ++v) lut[static_cast<std::size_t>(v)] = quantize(255.0 * std::pow(v / 255.0, g));
  return detail::map_lut(in, lut);
}

inline Image brightness(const Image& in, double delta_i) {
  std::array<std::uint8_t, 256> lut{};
  for (int v = 0; v < 256; ++v) lut[static_cast<std::size_t>(v)] = quantize(v + delta_i);
  return detail::map_lut(in, lut);
}

/// Multiplicative mask 1 - s (d / d_max)^2 with d measured between pixel
/// centres; the corner pixels sit at d_max.
inline Image vignetting(const Image& in, double strength) {
  Image out = in;
  const double cx = (in.width() - 1) / 2.0;
  const double cy = (in.height() - 1) / 2.0;
  const double dmax2 = cx * cx + cy * cy;
  if (dmax2 == 0.0) return out;
  for (int y = 0; y < in.height(); ++y) {
    for (int x = 0; x < in.width(); ++x) {
      const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
      const double m = 1.0 - strength * d2 / dmax2;
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = quantize(m * in.at(x, y, c));
    }
  }
  return out;
}

/// Per-channel gain; `factors[c]` is applied only where `applied[c]` is set.
inline Image color_jitter(const Image& in, const std::array<double, 3>& factors, const std::array<bool, 3>& applied) {
  std::array<std::array<std::uint8_t, 256>, 3> lut{};
  for (std::size_t c = 0; c < 3; ++c) {
    for (int v = 0; v < 256; ++v) lut[c][static_cast<std::size_t>(v)] = applied[c] ? quantize(v * factors[c]) : static_cast<std::uint8_t>(v);
  }
  Image out = in;
  auto bytes = out.bytes();
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = lut[i % 3][bytes[i]];
  return out;
}

}  // namespace wbcbench::ops
