#pragma once

// 8-bit RGB PNG read/write through libpng. Encoding uses fixed zlib settings
// and writes no timestamps or text chunks, so equal pixels give equal bytes.

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "wbcbench/error.hpp"
#include "wbcbench/image.hpp"

namespace wbcbench::png {

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline void on_error(png_structp ptr, png_const_charp msg) {
  auto* message = static_cast<std::string*>(png_get_error_ptr(ptr));
  if (message) *message = msg;
  png_longjmp(ptr, 1);
}

inline void on_warning(png_structp, png_const_charp) {}

}  // namespace detail

/// Reads any 8/16-bit gray/RGB/palette PNG and converts it to 8-bit RGB.
inline Image read(const std::filesystem::path& path) {
  detail::FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError("cannot open image '" + path.string() + "'");
  std::string message;
  png_structp ptr = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, detail::on_error, detail::on_warning);
  if (!ptr) throw IoError("libpng initialisation failed");
  png_infop info = png_create_info_struct(ptr);
  std::vector<std::uint8_t> pixels;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0, height = 0;
  if (setjmp(png_jmpbuf(ptr))) {
    png_destroy_read_struct(&ptr, &info, nullptr);
    throw IoError("cannot decode '" + path.string() + "': " + message);
  }
  png_init_io(ptr, file.get());
  png_read_info(ptr, info);
  width = png_get_image_width(ptr, info);
  height = png_get_image_height(ptr, info);
  const int color = png_get_color_type(ptr, info);
  const int depth = png_get_bit_depth(ptr, info);
  if (depth == 16) png_set_strip_16(ptr);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(ptr);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(ptr);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(ptr);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(ptr);
  if (png_get_valid(ptr, info, PNG_INFO_tRNS)) png_set_strip_alpha(ptr);
  png_read_update_info(ptr, info);
  if (png_get_rowbytes(ptr, info) != static_cast<png_size_t>(width) * 3) {
    png_destroy_read_struct(&ptr, &info, nullptr);
    throw IoError("'" + path.string() + "' does not decode to 8-bit RGB");
  }
  pixels.resize(static_cast<std::size_t>(width) * height * 3);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = pixels.data() + static_cast<std::size_t>(y) * width * 3;
  png_read_image(ptr, rows.data());
  png_read_end(ptr, nullptr);
  png_destroy_read_struct(&ptr, &info, nullptr);
  return Image(static_cast<int>(width), static_cast<int>(height), std::move(pixels));
}

inline void write(const Image& img, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  detail::FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError("cannot open '" + path.string() + "' for writing");
  std::string message;
  png_structp ptr = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, detail::on_error, detail::on_warning);
  if (!ptr) throw IoError("libpng initialisation failed");
  png_infop info = png_create_info_struct(ptr);
  std::vector<png_bytep> rows(static_cast<std::size_t>(img.height()));
  if (setjmp(png_jmpbuf(ptr))) {
    png_destroy_write_struct(&ptr, &info);
    throw IoError("cannot encode '" + path.string() + "': " + message);
  }
  png_init_io(ptr, file.get());
  png_set_compression_level(ptr, 6);
  png_set_filter(ptr, PNG_FILTER_TYPE_BASE, PNG_FILTER_SUB);
  png_set_IHDR(ptr, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_BASE, PNG_FILTER_TYPE_BASE);
  png_write_info(ptr, info);
  auto* base = const_cast<std::uint8_t*>(img.bytes().data());
  for (int y = 0; y < img.height(); ++y) rows[static_cast<std::size_t>(y)] = base + static_cast<std::size_t>(y) * img.width() * 3;
  png_write_image(ptr, rows.data());
  png_write_end(ptr, nullptr);
  png_destroy_write_struct(&ptr, &info);
  if (std::fflush(file.get()) != 0) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace wbcbench::png
