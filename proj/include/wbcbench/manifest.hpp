#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "wbcbench/csv.hpp"
#include "wbcbench/error.hpp"
#include "wbcbench/taxonomy.hpp"

namespace wbcbench {

/// Reference patch side in pixels; any square size is accepted when configured.
inline constexpr int kDefaultImageSide = 368;

/// One labelled cell patch. The raster lives at `source_path`, which is
/// `<image_id>.png` relative to whatever image directory the caller supplies.
struct ImageRecord {
  std::string image_id;
  std::string patient_id;
  ClassLabel label = ClassLabel::SNE;
  std::filesystem::path source_path;
  std::optional<SplitName> split;
  std::optional<Severity> severity;
  std::optional<std::uint64_t> seed;

  bool operator==(const ImageRecord&) const = default;
};

inline std::filesystem::path default_source_path(const std::string& image_id) {
  return std::filesystem::path(image_id + ".png");
}

inline ImageRecord make_record(std::string image_id, std::string patient_id, ClassLabel label) {
  ImageRecord r;
  r.source_path = default_source_path(image_id);
  r.image_id = std::move(image_id);
  r.patient_id = std::move(patient_id);
  r.label = label;
  return r;
}

struct Manifest {
  std::vector<ImageRecord> records;

  bool operator==(const Manifest&) const = default;

  [[nodiscard]] bool empty() const noexcept { return records.empty(); }
  [[nodiscard]] std::size_t size() const noexcept { return records.size(); }

  [[nodiscard]] bool has_split() const noexcept { return !records.empty() && records.front().split.has_value(); }
  [[nodiscard]] bool has_severity() const noexcept {
    return !records.empty() && records.front().severity.has_value();
  }
  [[nodiscard]] bool has_seed() const noexcept { return !records.empty() && records.front().seed.has_value(); }

  /// Records whose split tag equals `split`, in file order.
  [[nodiscard]] Manifest restrict_to(SplitName split) const {
    Manifest out;
    for (const auto& r : records) {
      if (r.split == split) out.records.push_back(r);
    }
    return out;
  }

  [[nodiscard]] ClassCounts class_counts() const noexcept {
    ClassCounts counts{};
    for (const auto& r : records) ++counts[index_of(r.label)];
    return counts;
  }
};

/// Throws ValidationError on duplicate ids, bad ids, or partially-present optional columns.
inline void validate(const Manifest& m) {
  std::unordered_map<std::string, std::size_t> seen;
  const bool split = m.has_split();
  const bool severity = m.has_severity();
  const bool seed = m.has_seed();
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    const auto& r = m.records[i];
    if (!csv::is_plain_token(r.image_id)) throw ValidationError("record " + std::to_string(i) + ": invalid image_id '" + r.image_id + "'");
    if (!csv::is_plain_token(r.patient_id)) throw ValidationError("record " + std::to_string(i) + ": invalid patient_id '" + r.patient_id + "'");
    if (!seen.emplace(r.image_id, i).second) throw ValidationError("duplicate image_id '" + r.image_id + "'");
    if (r.split.has_value() != split) throw ValidationError("split tag present on some records but not all");
    if (r.severity.has_value() != severity) throw ValidationError("severity tag present on some records but not all");
    if (r.seed.has_value() != seed) throw ValidationError("seed present on some records but not all");
  }
}

namespace detail {

inline std::uint64_t parse_u64(const std::string& s, const std::string& where) {
  if (s.empty() || s.size() > 20) throw ValidationError(where + "malformed seed '" + s + "'");
  std::uint64_t v = 0;
  for (char ch : s) {
    if (ch < '0' || ch > '9') throw ValidationError(where + "malformed seed '" + s + "'");
    const std::uint64_t digit = static_cast<std::uint64_t>(ch - '0');
    if (v > (UINT64_MAX - digit) / 10) throw ValidationError(where + "seed out of range '" + s + "'");
    v = v * 10 + digit;
  }
  return v;
}

}  // namespace detail

inline Manifest parse_manifest(std::istream& in, const std::filesystem::path& name = "<manifest>") {
  const auto rows = csv::read_rows(in);
  if (rows.empty()) throw ValidationError(name.string() + ": missing header");
  const auto& header = rows.front();
  const auto& cols = header.fields;
  if (cols.size() < 3 || cols[0] != "image_id" || cols[1] != "patient_id" || cols[2] != "label") {
    throw ValidationError(csv::line_prefix(name, header.line) +
                          "header must start with image_id,patient_id,label");
  }
  // Optional columns must appear in canonical order.
  static const std::vector<std::string> kOptional{"split", "severity", "seed"};
  bool has_split = false, has_severity = false, has_seed = false;
  std::size_t next_optional = 0;
  for (std::size_t i = 3; i < cols.size(); ++i) {
    while (next_optional < kOptional.size() && kOptional[next_optional] != cols[i]) ++next_optional;
    if (next_optional == kOptional.size()) {
      throw ValidationError(csv::line_prefix(name, header.line) + "unexpected or misordered column '" + cols[i] + "'");
    }
    if (cols[i] == "split") has_split = true;
    if (cols[i] == "severity") has_severity = true;
    if (cols[i] == "seed") has_seed = true;
    ++next_optional;
  }

  Manifest m;
  std::unordered_map<std::string, std::size_t> first_line;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const auto& row = rows[k];
    const auto where = csv::line_prefix(name, row.line);
    if (row.fields.size() != cols.size()) {
      throw ValidationError(where + "malformed row: expected " + std::to_string(cols.size()) + " fields, got " +
                            std::to_string(row.fields.size()));
    }
    const auto& f = row.fields;
    if (!csv::is_plain_token(f[0])) throw ValidationError(where + "malformed row: invalid image_id '" + f[0] + "'");
    if (!csv::is_plain_token(f[1])) throw ValidationError(where + "malformed row: invalid patient_id '" + f[1] + "'");
    auto [it, inserted] = first_line.emplace(f[0], row.line);
    if (!inserted) {
      throw ValidationError(where + "duplicate image_id '" + f[0] + "' (first seen on line " +
                            std::to_string(it->second) + ")");
    }
    auto label = parse_class_label(f[2]);
    if (!label) throw ValidationError(where + "unknown label '" + f[2] + "'");
    ImageRecord r = make_record(f[0], f[1], *label);
    std::size_t c = 3;
    if (has_split) {
      r.split = parse_split(f[c]);
      if (!r.split) throw ValidationError(where + "unknown split '" + f[c] + "'");
      ++c;
    }
    if (has_severity) {
      r.severity = parse_severity(f[c]);
      if (!r.severity) throw ValidationError(where + "unknown severity '" + f[c] + "'");
      ++c;
    }
    if (has_seed) r.seed = detail::parse_u64(f[c], where);
    m.records.push_back(std::move(r));
  }
  return m;
}

inline Manifest parse_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
  return parse_manifest(in, path);
}

inline std::string format_manifest(const Manifest& m) {
  validate(m);
  std::string out = "image_id,patient_id,label";
  if (m.has_split()) out += ",split";
  if (m.has_severity()) out += ",severity";
  if (m.has_seed()) out += ",seed";
  out += '\n';
  for (const auto& r : m.records) {
    out += r.image_id;
    out += ',';
    out += r.patient_id;
    out += ',';
    out += to_string(r.label);
    if (r.split) {
      out += ',';
      out += to_string(*r.split);
    }
    if (r.severity) {
      out += ',';
      out += to_string(*r.severity);
    }
    if (r.seed) {
      out += ',';
      out += std::to_string(*r.seed);
    }
    out += '\n';
  }
  return out;
}

inline void write_manifest(const Manifest& m, const std::filesystem::path& path) {
  csv::write_text(path, format_manifest(m));
}

}  // namespace wbcbench
