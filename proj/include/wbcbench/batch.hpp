#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <system_error>
#include <thread>
#include <vector>

#include "json.hpp"

#include "wbcbench/csv.hpp"
#include "wbcbench/error.hpp"
#include "wbcbench/manifest.hpp"
#include "wbcbench/png.hpp"
#include "wbcbench/recipe.hpp"

namespace wbcbench {

struct BatchOptions {
  std::filesystem::path images_dir;
  std::filesystem::path out_dir;
  DegradationConfig config;
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

struct BatchEntry {
  DegradationRecipe recipe;
  /// Set when the image could not be read, checked or written.
  std::optional<std::string> error;
};

struct BatchResult {
  /// One entry per manifest record, in manifest order.
  std::vector<BatchEntry> entries;

  [[nodiscard]] std::size_t failures() const noexcept {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.error ? 1 : 0;
    return n;
  }
  [[nodiscard]] bool ok() const noexcept { return failures() == 0; }
};

namespace detail {

inline BatchEntry degrade_one(const ImageRecord& record, const BatchOptions& opt) {
  const std::uint64_t seed = image_seed(opt.seed, record.image_id);
  BatchEntry entry{sample_recipe(record.image_id, *record.severity, opt.config, seed), std::nullopt};
  const auto src = opt.images_dir / record.source_path;
  const auto dst = opt.out_dir / record.source_path;
  try {
    std::filesystem::create_directories(dst.parent_path());
    if (entry.recipe.steps.empty()) {
      std::error_code ec;
      std::filesystem::copy_file(src, dst, std::filesystem::copy_options::overwrite_existing, ec);
      if (ec) throw IoError("cannot copy '" + src.string() + "': " + ec.message());
    } else {
      const Image in = png::read(src);
      png::write(apply_recipe(in, entry.recipe, opt.config), dst);
    }
  } catch (const std::exception& e) {
    entry.error = e.what();
  }
  return entry;
}

}  // namespace detail

/// Degrades every record of a severity-tagged manifest. Each image is seeded
/// with image_seed(seed, image_id), so outputs do not depend on `workers`.
/// Pristine images are copied byte for byte. Failures are recorded per entry
/// and the batch carries on.
inline BatchResult degrade_batch(const Manifest& m, const BatchOptions& opt) {
  validate(m);
  validate(opt.config);
  if (!m.empty() && !m.has_severity()) throw ValidationError("manifest has no severity column; run assign first");
  BatchResult result;
  result.entries.resize(m.size());
  const unsigned threads = std::max(1u, std::min<unsigned>(opt.workers, static_cast<unsigned>(std::max<std::size_t>(1, m.size()))));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < m.size(); i = next++) result.entries[i] = detail::degrade_one(m.records[i], opt);
  };
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  return result;
}

/// JSON-lines, one object per image in manifest order; failed images carry an "error" field.
inline std::string format_recipe_log(const BatchResult& result) {
  std::string out;
  for (const auto& e : result.entries) {
    auto j = to_json(e.recipe);
    if (e.error) j["error"] = *e.error;
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace wbcbench
