#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "aca/errors.hpp"
#include "aca/rng.hpp"
#include "aca/vec.hpp"

namespace aca {

struct Example {
  Vec features;
  int label = 0;
};

struct Dataset {
  std::vector<Example> examples;
  std::size_t d_in = 0;
  int num_classes = 0;
  // Per-feature (min, max) observed when the data entered the pipeline.
  std::vector<std::pair<double, double>> feature_range;

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
};

enum class Normalize { none, minmax_01, divide_by_255 };

inline std::vector<std::pair<double, double>> compute_feature_range(const std::vector<Example>& examples,
                                                                    std::size_t d_in) {
  std::vector<std::pair<double, double>> range(
      d_in, {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()});
  for (const Example& e : examples) {
    for (std::size_t j = 0; j < d_in; ++j) {
      range[j].first = std::min(range[j].first, e.features[j]);
      range[j].second = std::max(range[j].second, e.features[j]);
    }
  }
  return range;
}

inline void validate_dataset(const Dataset& ds) {
  if (ds.empty()) throw std::invalid_argument("dataset is empty");
  if (ds.d_in == 0) throw std::invalid_argument("dataset has d_in == 0");
  if (ds.num_classes <= 0) throw std::invalid_argument("dataset has no classes");
  for (const Example& e : ds.examples) {
    if (e.features.size() != ds.d_in) throw std::invalid_argument("example feature length != d_in");
    if (e.label < 0 || e.label >= ds.num_classes) throw std::invalid_argument("example label out of range");
  }
}

namespace detail {

inline std::string trim(std::string s) {
  const auto notspace = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), notspace));
  s.erase(std::find_if(s.rbegin(), s.rend(), notspace).base(), s.end());
  return s;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

inline std::optional<long long> parse_int(const std::string& s) {
  if (s.empty()) return std::nullopt;
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace detail

// Loads a comma-separated file with a header row. The label column is selected
// by name; feature columns are either an explicit name list or "all-others".
// Columns whose cells do not all parse as numbers are treated as categorical
// and integer-encoded in order of first appearance. Label values likewise:
// numeric labels must already be the contiguous indices 0..K-1, non-numeric
// labels are encoded by first appearance.
inline Dataset load_csv_dataset(const std::filesystem::path& path, const std::string& label_column,
                                const std::vector<std::string>& feature_columns = {}) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open CSV file: " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw schema_error("CSV file has no header row: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = detail::split_csv_line(line);

  const auto column_index = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw schema_error("column '" + name + "' not found in " + path.string());
    return static_cast<std::size_t>(it - header.begin());
  };

  const std::size_t label_idx = column_index(label_column);
  std::vector<std::size_t> feature_idx;
  if (feature_columns.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (j != label_idx) feature_idx.push_back(j);
  } else {
    for (const std::string& name : feature_columns) feature_idx.push_back(column_index(name));
  }
  if (feature_idx.empty()) throw schema_error("no feature columns selected from " + path.string());

  std::vector<std::vector<std::string>> rows;
  std::size_t row_number = 0;
  while (std::getline(in, line)) {
    ++row_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw parse_error("row " + std::to_string(row_number) + ": expected " + std::to_string(header.size()) +
                        " cells, got " + std::to_string(cells.size()));
    for (std::size_t j : feature_idx)
      if (cells[j].empty()) throw parse_error("row " + std::to_string(row_number) + ": empty feature cell");
    if (cells[label_idx].empty()) throw parse_error("row " + std::to_string(row_number) + ": empty label cell");
    rows.push_back(std::move(cells));
  }
  if (rows.empty()) throw schema_error("CSV file has no data rows: " + path.string());

  const std::size_t d_in = feature_idx.size();

  // Per-column decision: numeric iff every cell parses as a double.
  std::vector<bool> numeric(d_in, true);
  for (std::size_t f = 0; f < d_in; ++f) {
    for (const auto& row : rows) {
      if (!detail::parse_double(row[feature_idx[f]])) {
        numeric[f] = false;
        break;
      }
    }
  }

  std::vector<std::map<std::string, double>> codes(d_in);
  Dataset ds;
  ds.d_in = d_in;
  ds.examples.reserve(rows.size());

  // Labels: all-integer columns are taken verbatim, anything else is encoded.
  bool labels_numeric = true;
  for (const auto& row : rows) {
    if (!detail::parse_int(row[label_idx])) {
      labels_numeric = false;
      break;
    }
  }
  std::map<std::string, int> label_codes;

  for (std::size_t r = 0; r < rows.size(); ++r) {
    Example e;
    e.features.resize(d_in);
    for (std::size_t f = 0; f < d_in; ++f) {
      const std::string& cell = rows[r][feature_idx[f]];
      if (numeric[f]) {
        e.features[f] = *detail::parse_double(cell);
      } else {
        auto [it, inserted] = codes[f].try_emplace(cell, 0.0);
        if (inserted) it->second = static_cast<double>(codes[f].size() - 1);
        e.features[f] = it->second;
      }
    }
    if (labels_numeric) {
      const long long v = *detail::parse_int(rows[r][label_idx]);
      if (v < 0)
        throw parse_error("row " + std::to_string(r + 1) + ": negative label " + std::to_string(v));
      e.label = static_cast<int>(v);
    } else {
      auto [it, inserted] = label_codes.try_emplace(rows[r][label_idx], 0);
      if (inserted) it->second = static_cast<int>(label_codes.size() - 1);
      e.label = it->second;
    }
    ds.examples.push_back(std::move(e));
  }

  int max_label = 0;
  for (const Example& e : ds.examples) max_label = std::max(max_label, e.label);
  ds.num_classes = max_label + 1;
  if (labels_numeric) {
    std::vector<bool> seen(static_cast<std::size_t>(ds.num_classes), false);
    for (const Example& e : ds.examples) seen[static_cast<std::size_t>(e.label)] = true;
    if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }))
      throw schema_error("numeric labels in " + path.string() + " are not contiguous 0..K-1");
  }
  ds.feature_range = compute_feature_range(ds.examples, ds.d_in);
  return ds;
}

// Writes features as f0..f{d-1} plus a final integer label column. Together
// with load_csv_dataset this round-trips a dataset exactly (17 significant
// digits reproduce IEEE doubles).
inline void write_csv_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open CSV file for writing: " + path.string());
  for (std::size_t j = 0; j < ds.d_in; ++j) out << 'f' << j << ',';
  out << "label\n";
  char buf[64];
  for (const Example& e : ds.examples) {
    for (double v : e.features) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << buf << ',';
    }
    out << e.label << '\n';
  }
}

namespace detail {

inline std::uint32_t read_u32_be(std::istream& in, const std::string& file) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw format_error("truncated header in " + file);
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

}  // namespace detail

// IDX image/label pair (big-endian magics 2051 / 2049). Pixels are kept as
// raw byte values in [0, 255]; each image is flattened row-major.
inline Dataset load_idx_images(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw io_error("cannot open IDX images file: " + images_path.string());
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw io_error("cannot open IDX labels file: " + labels_path.string());

  const std::string img_name = images_path.string();
  const std::string lab_name = labels_path.string();

  const std::uint32_t img_magic = detail::read_u32_be(img, img_name);
  if (img_magic != 2051)
    throw format_error("bad magic " + std::to_string(img_magic) + " in " + img_name + " (expected 2051)");
  const std::uint32_t count = detail::read_u32_be(img, img_name);
  const std::uint32_t rows = detail::read_u32_be(img, img_name);
  const std::uint32_t cols = detail::read_u32_be(img, img_name);

  const std::uint32_t lab_magic = detail::read_u32_be(lab, lab_name);
  if (lab_magic != 2049)
    throw format_error("bad magic " + std::to_string(lab_magic) + " in " + lab_name + " (expected 2049)");
  const std::uint32_t lab_count = detail::read_u32_be(lab, lab_name);
  if (lab_count != count)
    throw format_error("count mismatch: " + img_name + " has " + std::to_string(count) + " images, " + lab_name +
                       " has " + std::to_string(lab_count) + " labels");
  if (count == 0) throw format_error("no images in " + img_name);

  const std::size_t d_in = std::size_t(rows) * cols;
  Dataset ds;
  ds.d_in = d_in;
  ds.examples.resize(count);

  std::vector<unsigned char> pixel(d_in);
  for (std::uint32_t i = 0; i < count; ++i) {
    if (!img.read(reinterpret_cast<char*>(pixel.data()), static_cast<std::streamsize>(d_in)))
      throw format_error("truncated image payload in " + img_name);
    Example& e = ds.examples[i];
    e.features.resize(d_in);
    for (std::size_t j = 0; j < d_in; ++j) e.features[j] = static_cast<double>(pixel[j]);
  }
  std::vector<unsigned char> labels(count);
  if (!lab.read(reinterpret_cast<char*>(labels.data()), static_cast<std::streamsize>(count)))
    throw format_error("truncated label payload in " + lab_name);
  int max_label = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    ds.examples[i].label = labels[i];
    max_label = std::max(max_label, int(labels[i]));
  }
  ds.num_classes = max_label + 1;
  ds.feature_range = compute_feature_range(ds.examples, ds.d_in);
  return ds;
}

inline Dataset normalize_features(const Dataset& ds, Normalize method) {
  Dataset out = ds;
  switch (method) {
    case Normalize::none:
      return out;
    case Normalize::divide_by_255:
      for (Example& e : out.examples)
        for (double& v : e.features) v /= 255.0;
      break;
    case Normalize::minmax_01: {
      if (ds.feature_range.size() != ds.d_in)
        throw std::invalid_argument("minmax_01 requires a recorded feature range");
      for (Example& e : out.examples) {
        for (std::size_t j = 0; j < ds.d_in; ++j) {
          const auto [lo, hi] = ds.feature_range[j];
          // Constant columns map to 0.
          e.features[j] = (hi > lo) ? (e.features[j] - lo) / (hi - lo) : 0.0;
        }
      }
      break;
    }
  }
  out.feature_range = compute_feature_range(out.examples, out.d_in);
  return out;
}

// Deterministic disjoint partition: the first round(fraction*n) entries of a
// seeded permutation form the left side.
inline std::pair<Dataset, Dataset> split(const Dataset& ds, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw std::invalid_argument("split fraction must be in (0,1)");
  const std::size_t n = ds.size();
  const std::size_t n_left = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (n_left == 0 || n_left == n)
    throw std::invalid_argument("split leaves one side empty (n=" + std::to_string(n) +
                                ", fraction=" + std::to_string(fraction) + ")");

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  auto rng = make_rng(derive_seed(seed, std::string_view("split")));
  std::shuffle(perm.begin(), perm.end(), rng);

  Dataset left, right;
  left.d_in = right.d_in = ds.d_in;
  left.num_classes = right.num_classes = ds.num_classes;
  for (std::size_t i = 0; i < n; ++i)
    (i < n_left ? left : right).examples.push_back(ds.examples[perm[i]]);
  left.feature_range = compute_feature_range(left.examples, left.d_in);
  right.feature_range = compute_feature_range(right.examples, right.d_in);
  return {std::move(left), std::move(right)};
}

// Uniform without-replacement draw of per_class examples from every class.
// Output keeps the original dataset order.
inline Dataset subsample_balanced(const Dataset& ds, std::size_t per_class, std::uint64_t seed) {
  if (per_class == 0) throw std::invalid_argument("per_class must be positive");
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(ds.num_classes));
  for (std::size_t i = 0; i < ds.size(); ++i)
    by_class[static_cast<std::size_t>(ds.examples[i].label)].push_back(i);

  std::vector<std::size_t> chosen;
  chosen.reserve(per_class * by_class.size());
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].size() < per_class)
      throw std::invalid_argument("class " + std::to_string(c) + " has only " + std::to_string(by_class[c].size()) +
                                  " examples, need " + std::to_string(per_class));
    auto rng = make_rng(derive_seed(seed, std::string_view("subsample"), c));
    std::vector<std::size_t>& pool = by_class[c];
    std::shuffle(pool.begin(), pool.end(), rng);
    chosen.insert(chosen.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(per_class));
  }
  std::sort(chosen.begin(), chosen.end());

  Dataset out;
  out.d_in = ds.d_in;
  out.num_classes = ds.num_classes;
  out.examples.reserve(chosen.size());
  for (std::size_t i : chosen) out.examples.push_back(ds.examples[i]);
  out.feature_range = compute_feature_range(out.examples, out.d_in);
  return out;
}

}  // namespace aca
