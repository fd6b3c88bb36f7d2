#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "wbcbench/error.hpp"

namespace wbcbench {

/// Interleaved 8-bit RGB raster, row-major.
class Image {
 public:
  static constexpr int kChannels = 3;

  Image() = default;
  Image(int width, int height, std::uint8_t fill = 0)
      : width_(width), height_(height), data_(checked_size(width, height), fill) {}
  Image(int width, int height, std::vector<std::uint8_t> data) : width_(width), height_(height), data_(std::move(data)) {
    if (data_.size() != checked_size(width, height)) throw ValidationError("pixel buffer size does not match dimensions");
  }

  [[nodiscard]] int width() const noexcept { return width_; }
  [[nodiscard]] int height() const noexcept { return height_; }
  [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

  std::uint8_t& at(int x, int y, int ch) noexcept { return data_[offset(x, y, ch)]; }
  [[nodiscard]] std::uint8_t at(int x, int y, int ch) const noexcept { return data_[offset(x, y, ch)]; }

  [[nodiscard]] std::span<const std::uint8_t> bytes() const noexcept { return data_; }
  std::span<std::uint8_t> bytes() noexcept { return data_; }

  bool operator==(const Image&) const = default;

 private:
  static std::size_t checked_size(int w, int h) {
    if (w <= 0 || h <= 0) throw ValidationError("image dimensions must be positive");
    return static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * kChannels;
  }
  [[nodiscard]] std::size_t offset(int x, int y, int ch) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * kChannels +
           static_cast<std::size_t>(ch);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Floating-point working copy used inside operators.
struct FloatImage {
  int width = 0;
  int height = 0;
  std::vector<double> data;  // interleaved RGB

  static FloatImage from(const Image& img) {
    FloatImage f{img.width(), img.height(), {}};
    f.data.assign(img.bytes().begin(), img.bytes().end());
    return f;
  }
  double& at(int x, int y, int ch) noexcept {
    return data[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3 +
                static_cast<std::size_t>(ch)];
  }
  [[nodiscard]] double at(int x, int y, int ch) const noexcept {
    return data[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3 +
                static_cast<std::size_t>(ch)];
  }
};

/// Round half away from zero, then clamp to [0,255].
inline std::uint8_t quantize(double v) noexcept {
  if (!(v > 0.0)) return 0;  // also maps NaN to 0
  if (v >= 255.0) return 255;
  return static_cast<std::uint8_t>(v + 0.5);
}

inline Image to_image(const FloatImage& f) {
  std::vector<std::uint8_t> out(f.data.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = quantize(f.data[i]);
  return Image(f.width, f.height, std::move(out));
}

inline double mean_squared_error(const Image& a, const Image& b) {
  if (a.width() != b.width() || a.height() != b.height()) throw ValidationError("MSE of differently sized images");
  double sum = 0.0;
  const auto x = a.bytes();
  const auto y = b.bytes();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = static_cast<double>(x[i]) - static_cast<double>(y[i]);
    sum += d * d;
  }
  return x.empty() ? 0.0 : sum / static_cast<double>(x.size());
}

}  // namespace wbcbench
