#pragma once

// Flow-feature datasets: CSV ingestion, sanitization, stratified sampling and
// splitting, and the binary dataset cache.

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "cianids/attacks.hpp"
#include "cianids/csv.hpp"
#include "cianids/error.hpp"
#include "cianids/rng.hpp"
#include "cianids/util.hpp"

namespace cianids {

inline constexpr std::string_view kDefaultLabelColumn = "Label";
inline constexpr std::string_view kDefaultBenignLabel = "BENIGN";

struct FlowSchema {
  std::vector<std::string> feature_names;
  std::string label_column{kDefaultLabelColumn};

  std::size_t size() const { return feature_names.size(); }

  /// Column index by trimmed, case-insensitive name.
  std::optional<std::size_t> find(std::string_view name) const {
    const std::string_view key = trim(name);
    for (std::size_t i = 0; i < feature_names.size(); ++i) {
      if (iequals(feature_names[i], key)) return i;
    }
    return std::nullopt;
  }

  void validate() const {
    std::unordered_set<std::string> seen;
    for (const auto& name : feature_names) {
      const std::string key = to_lower(trim(name));
      if (!seen.insert(key).second) fail(Errc::schema_mismatch, "duplicate feature name: " + name);
    }
    if (seen.contains(to_lower(trim(label_column)))) {
      fail(Errc::schema_mismatch, "label column '" + label_column + "' is also a feature");
    }
  }

  friend bool operator==(const FlowSchema&, const FlowSchema&) = default;
};

/// Immutable feature matrix with per-row attack labels and binary class.
class FlowDataset {
 public:
  FlowDataset() = default;

  /// Validates every invariant; class is derived from the labels.
  FlowDataset(FlowSchema schema, std::vector<double> values, std::vector<std::string> attack_labels,
              std::string benign_label = std::string(kDefaultBenignLabel))
      : schema_(std::move(schema)),
        values_(std::move(values)),
        labels_(std::move(attack_labels)),
        benign_label_(std::move(benign_label)) {
    schema_.validate();
    const std::size_t cols = schema_.size();
    if (cols == 0 && !labels_.empty()) fail(Errc::schema_mismatch, "dataset has rows but no features");
    if (values_.size() != labels_.size() * cols) {
      fail(Errc::dimension_mismatch, "matrix size does not match rows x features");
    }
    classes_.resize(labels_.size());
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      classes_[i] = labels_[i] == benign_label_ ? 0 : 1;
    }
  }

  const FlowSchema& schema() const { return schema_; }
  std::size_t rows() const { return labels_.size(); }
  std::size_t cols() const { return schema_.size(); }
  bool empty() const { return labels_.empty(); }

  std::span<const double> values() const { return values_; }
  std::span<const double> row(std::size_t i) const { return {values_.data() + i * cols(), cols()}; }
  double at(std::size_t i, std::size_t j) const { return values_[i * cols() + j]; }

  const std::vector<std::string>& attack_labels() const { return labels_; }
  const std::vector<std::uint8_t>& classes() const { return classes_; }
  const std::string& benign_label() const { return benign_label_; }

  std::array<std::size_t, 2> class_counts() const {
    std::array<std::size_t, 2> counts{0, 0};
    for (auto c : classes_) ++counts[c];
    return counts;
  }

  /// Rows in the given order (duplicates allowed).
  FlowDataset subset(std::span<const std::size_t> indices) const {
    std::vector<double> v;
    v.reserve(indices.size() * cols());
    std::vector<std::string> l;
    l.reserve(indices.size());
    for (auto i : indices) {
      if (i >= rows()) fail(Errc::out_of_range, "row index " + std::to_string(i) + " out of range");
      const auto r = row(i);
      v.insert(v.end(), r.begin(), r.end());
      l.push_back(labels_[i]);
    }
    return FlowDataset(schema_, std::move(v), std::move(l), benign_label_);
  }

  /// Same rows, columns picked (and possibly renamed) by index.
  FlowDataset select_columns(std::span<const std::size_t> columns,
                             std::vector<std::string> new_names = {}) const {
    FlowSchema s;
    s.label_column = schema_.label_column;
    for (std::size_t k = 0; k < columns.size(); ++k) {
      if (columns[k] >= cols()) fail(Errc::out_of_range, "column index out of range");
      s.feature_names.push_back(new_names.empty() ? schema_.feature_names[columns[k]] : new_names[k]);
    }
    std::vector<double> v;
    v.reserve(rows() * columns.size());
    for (std::size_t i = 0; i < rows(); ++i) {
      for (auto j : columns) v.push_back(at(i, j));
    }
    return FlowDataset(std::move(s), std::move(v), labels_, benign_label_);
  }

  /// Appends rows (same schema) and returns the combined dataset.
  FlowDataset append(const FlowDataset& other) const {
    if (other.schema_ != schema_) fail(Errc::schema_mismatch, "cannot append datasets with different schemas");
    std::vector<double> v = values_;
    v.insert(v.end(), other.values_.begin(), other.values_.end());
    std::vector<std::string> l = labels_;
    l.insert(l.end(), other.labels_.begin(), other.labels_.end());
    return FlowDataset(schema_, std::move(v), std::move(l), benign_label_);
  }

  friend bool operator==(const FlowDataset& a, const FlowDataset& b) {
    if (a.schema_ != b.schema_ || a.labels_ != b.labels_ || a.benign_label_ != b.benign_label_) return false;
    if (a.values_.size() != b.values_.size()) return false;
    return a.values_.empty() ||
           std::memcmp(a.values_.data(), b.values_.data(), a.values_.size() * sizeof(double)) == 0;
  }

 private:
  FlowSchema schema_;
  std::vector<double> values_;
  std::vector<std::string> labels_;
  std::vector<std::uint8_t> classes_;
  std::string benign_label_{kDefaultBenignLabel};
};

// ---------------------------------------------------------------------------
// CSV ingestion

struct CsvOptions {
  std::string label_column{kDefaultLabelColumn};
  std::string benign_label{kDefaultBenignLabel};
};

struct LoadResult {
  FlowDataset dataset;
  std::size_t dropped_lines = 0;  // wrong field count or unparseable number
  std::vector<std::string> renamed_duplicate_headers;
};

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::missing_file, "cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

inline std::optional<double> parse_double(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec == std::errc::result_out_of_range) {
    // Overflowing literals are infinite for our purposes; sanitize drops them.
    return text.front() == '-' ? -HUGE_VAL : HUGE_VAL;
  }
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) fail(Errc::internal, "number formatting failed");
  return std::string(buf, ptr);
}

/// Trimmed header names; later duplicates get a ".1", ".2", ... suffix.
inline std::vector<std::string> dedupe_headers(const std::vector<std::string>& raw,
                                               std::vector<std::string>& renamed) {
  std::vector<std::string> out;
  std::unordered_map<std::string, int> seen;
  for (const auto& h : raw) {
    std::string name(trim(h));
    const std::string key = to_lower(name);
    if (auto it = seen.find(key); it != seen.end()) {
      std::string candidate;
      do {
        candidate = name + "." + std::to_string(++it->second);
      } while (seen.contains(to_lower(candidate)));
      renamed.push_back(candidate);
      seen.emplace(to_lower(candidate), 0);
      out.push_back(std::move(candidate));
    } else {
      seen.emplace(key, 0);
      out.push_back(std::move(name));
    }
  }
  return out;
}

}  // namespace detail

/// Loads and concatenates CSV files in order. Headers are trimmed and must
/// match case-insensitively across files. Labels are mapped onto canonical
/// attack names; class is 0 exactly for the benign label.
inline LoadResult load_csv(std::span<const std::filesystem::path> paths, const CsvOptions& options = {}) {
  if (paths.empty()) fail(Errc::empty_input, "no input files given");
  for (const auto& p : paths) {
    if (!std::filesystem::exists(p)) fail(Errc::missing_file, "missing file: " + p.string());
  }

  LoadResult result;
  std::vector<std::string> header;
  std::optional<std::size_t> label_index;
  std::vector<double> values;
  std::vector<std::string> labels;
  std::vector<std::string> fields;

  for (const auto& path : paths) {
    const std::string text = detail::read_file(path);
    csv::Reader reader(text);
    if (!reader.next(fields)) fail(Errc::empty_input, "file has no header: " + path.string());

    std::vector<std::string> renamed;
    auto file_header = detail::dedupe_headers(fields, renamed);
    if (header.empty()) {
      header = std::move(file_header);
      result.renamed_duplicate_headers = std::move(renamed);
      for (std::size_t i = 0; i < header.size(); ++i) {
        if (iequals(header[i], trim(options.label_column))) label_index = i;
      }
      if (!label_index) {
        fail(Errc::header_mismatch, "label column '" + options.label_column + "' not found in " + path.string());
      }
    } else {
      const bool same = file_header.size() == header.size() &&
                        std::equal(header.begin(), header.end(), file_header.begin(),
                                   [](const std::string& a, const std::string& b) { return iequals(a, b); });
      if (!same) fail(Errc::header_mismatch, "header of " + path.string() + " differs from " + paths[0].string());
    }

    std::vector<double> row_values(header.size() - 1);
    while (reader.next(fields)) {
      if (fields.size() != header.size()) {
        ++result.dropped_lines;
        continue;
      }
      bool ok = true;
      std::size_t k = 0;
      for (std::size_t j = 0; j < fields.size() && ok; ++j) {
        if (j == *label_index) continue;
        const auto v = detail::parse_double(fields[j]);
        if (!v) ok = false;
        else row_values[k++] = *v;
      }
      if (!ok) {
        ++result.dropped_lines;
        continue;
      }
      values.insert(values.end(), row_values.begin(), row_values.end());
      labels.push_back(normalize_label(fields[*label_index], options.benign_label));
    }
  }

  if (labels.empty()) fail(Errc::empty_input, "input files contain no data rows");

  FlowSchema schema;
  schema.label_column = header[*label_index];
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j != *label_index) schema.feature_names.push_back(header[j]);
  }
  result.dataset = FlowDataset(std::move(schema), std::move(values), std::move(labels), options.benign_label);
  return result;
}

inline LoadResult load_csv(const std::filesystem::path& path, const CsvOptions& options = {}) {
  return load_csv(std::span<const std::filesystem::path>(&path, 1), options);
}

/// Writes features then label; numbers use shortest round-trip formatting so
/// reloading reproduces the matrix bit for bit.
inline void write_csv(const FlowDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io_failure, "cannot write " + path.string());
  for (const auto& name : ds.schema().feature_names) out << csv::quote_field(name) << ',';
  out << csv::quote_field(ds.schema().label_column) << '\n';
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    for (double v : ds.row(i)) out << detail::format_double(v) << ',';
    out << csv::quote_field(ds.attack_labels()[i]) << '\n';
  }
  if (!out) fail(Errc::io_failure, "write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// Sanitization

struct SanitizeReport {
  std::size_t rows_in = 0;
  std::size_t rows_dropped = 0;
  /// Per feature: number of dropped rows with a non-finite value in it.
  std::vector<std::pair<std::string, std::size_t>> dropped_by_column;
};

struct SanitizeResult {
  FlowDataset dataset;
  SanitizeReport report;
};

/// Drops every row with a NaN or infinite feature value.
inline SanitizeResult sanitize(const FlowDataset& ds) {
  SanitizeResult out;
  out.report.rows_in = ds.rows();
  std::vector<std::size_t> per_column(ds.cols(), 0);
  std::vector<std::size_t> keep;
  keep.reserve(ds.rows());
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    bool finite = true;
    const auto r = ds.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (!std::isfinite(r[j])) {
        finite = false;
        ++per_column[j];
      }
    }
    if (finite) keep.push_back(i);
  }
  out.report.rows_dropped = ds.rows() - keep.size();
  for (std::size_t j = 0; j < ds.cols(); ++j) {
    out.report.dropped_by_column.emplace_back(ds.schema().feature_names[j], per_column[j]);
  }
  if (keep.empty() && !ds.empty()) fail(Errc::empty_dataset, "sanitize dropped every row");
  out.dataset = keep.size() == ds.rows() ? ds : ds.subset(keep);
  return out;
}

// ---------------------------------------------------------------------------
// Sampling and splitting

namespace detail {

/// Splits `total` across two classes in proportion to `counts` using largest
/// remainders; an exact tie in remainders goes to the minority class.
inline std::array<std::size_t, 2> apportion(std::size_t total, std::array<std::size_t, 2> counts) {
  const std::size_t n = counts[0] + counts[1];
  std::array<std::size_t, 2> quota{};
  std::array<std::size_t, 2> remainder{};  // numerators over n, exact
  for (int c = 0; c < 2; ++c) {
    const unsigned __int128 num = static_cast<unsigned __int128>(total) * counts[c];
    quota[c] = static_cast<std::size_t>(num / n);
    remainder[c] = static_cast<std::size_t>(num % n);
  }
  std::size_t left = total - quota[0] - quota[1];
  const int minority = counts[1] <= counts[0] ? 1 : 0;
  while (left > 0) {
    int pick;
    if (remainder[0] != remainder[1]) pick = remainder[0] > remainder[1] ? 0 : 1;
    else pick = minority;
    if (quota[pick] >= counts[pick]) pick = 1 - pick;
    ++quota[pick];
    remainder[pick] = 0;
    --left;
  }
  return quota;
}

inline std::array<std::vector<std::size_t>, 2> rows_by_class(const FlowDataset& ds) {
  std::array<std::vector<std::size_t>, 2> out;
  for (std::size_t i = 0; i < ds.rows(); ++i) out[ds.classes()[i]].push_back(i);
  return out;
}

}  // namespace detail

/// Class-stratified sample of `target_rows` rows, original order preserved.
inline FlowDataset stratified_sample(const FlowDataset& ds, std::size_t target_rows, std::uint64_t seed) {
  if (target_rows == 0 || target_rows > ds.rows()) {
    fail(Errc::out_of_range, "sample size " + std::to_string(target_rows) + " outside (0, " +
                                 std::to_string(ds.rows()) + "]");
  }
  auto by_class = detail::rows_by_class(ds);
  const auto quota = detail::apportion(target_rows, {by_class[0].size(), by_class[1].size()});
  std::vector<std::size_t> picked;
  picked.reserve(target_rows);
  for (int c = 0; c < 2; ++c) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    rng.shuffle(std::span(by_class[c]));
    picked.insert(picked.end(), by_class[c].begin(), by_class[c].begin() + static_cast<std::ptrdiff_t>(quota[c]));
  }
  std::sort(picked.begin(), picked.end());
  return ds.subset(picked);
}

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
};

/// Class-stratified holdout split; both index lists are sorted ascending.
inline SplitIndices train_test_split(const FlowDataset& ds, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    fail(Errc::out_of_range, "train fraction must lie in (0, 1)");
  }
  auto by_class = detail::rows_by_class(ds);
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(ds.rows())));
  const auto quota = detail::apportion(n_train, {by_class[0].size(), by_class[1].size()});
  SplitIndices split;
  split.seed = seed;
  for (int c = 0; c < 2; ++c) {
    Rng rng(derive_seed(seed ^ 0x5EED5EED5EEDULL, static_cast<std::uint64_t>(c)));
    rng.shuffle(std::span(by_class[c]));
    const auto cut = by_class[c].begin() + static_cast<std::ptrdiff_t>(quota[c]);
    split.train.insert(split.train.end(), by_class[c].begin(), cut);
    split.test.insert(split.test.end(), cut, by_class[c].end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

// ---------------------------------------------------------------------------
// Fingerprints

/// Content hash over schema, matrix bytes and labels.
inline std::uint64_t dataset_hash(const FlowDataset& ds) {
  Fnv1a h;
  for (const auto& name : ds.schema().feature_names) h.update(std::string_view(name));
  h.update(std::string_view(ds.schema().label_column));
  h.update(std::string_view(ds.benign_label()));
  h.update(ds.values().data(), ds.values().size_bytes());
  for (const auto& l : ds.attack_labels()) h.update(std::string_view(l));
  return h.digest();
}

/// Hash of a row partition: indices plus the referenced rows' content.
inline std::uint64_t partition_hash(const FlowDataset& ds, std::span<const std::size_t> indices) {
  Fnv1a h;
  for (auto i : indices) {
    h.update_value(static_cast<std::uint64_t>(i));
    const auto r = ds.row(i);
    h.update(r.data(), r.size_bytes());
    h.update(std::string_view(ds.attack_labels()[i]));
  }
  return h.digest();
}

// ---------------------------------------------------------------------------
// Binary dataset cache
//
// Layout (little-endian):
//   "CIAFLOWD"  u32 version(=1)
//   str label_column, str benign_label, str notes
//   u64 n_features, str[n_features] names
//   u64 n_rows, f64[n_rows * n_features] row-major matrix
//   u64 n_distinct_labels, str[...] labels, u32[n_rows] label index per row
//   u64 FNV-1a of all preceding bytes
// where str = u64 length + bytes.

inline constexpr std::string_view kCacheMagic = "CIAFLOWD";
inline constexpr std::uint32_t kCacheVersion = 1;

namespace detail {

static_assert(std::endian::native == std::endian::little, "cache format assumes a little-endian host");

class ByteWriter {
 public:
  template <class T>
  void pod(const T& v) {
    append(&v, sizeof v);
  }
  void str(std::string_view s) {
    pod(static_cast<std::uint64_t>(s.size()));
    append(s.data(), s.size());
  }
  void append(const void* p, std::size_t n) {
    const auto* b = static_cast<const char*>(p);
    buf_.append(b, n);
  }
  std::string& buffer() { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}
  template <class T>
  T pod() {
    T v{};
    take(&v, sizeof v);
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint64_t>();
    if (n > remaining()) fail(Errc::malformed_file, "dataset cache truncated");
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  void take(void* out, std::size_t n) {
    if (n > remaining()) fail(Errc::malformed_file, "dataset cache truncated");
    std::memcpy(out, data_.data() + pos_, n);
    pos_ += n;
  }
  std::size_t remaining() const { return data_.size() - pos_; }
  std::size_t position() const { return pos_; }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Serialized cache bytes; `notes` is free text (JSON by convention).
inline std::string encode_cache(const FlowDataset& ds, std::string_view notes = {}) {
  detail::ByteWriter w;
  w.append(kCacheMagic.data(), kCacheMagic.size());
  w.pod(kCacheVersion);
  w.str(ds.schema().label_column);
  w.str(ds.benign_label());
  w.str(notes);
  w.pod(static_cast<std::uint64_t>(ds.cols()));
  for (const auto& n : ds.schema().feature_names) w.str(n);
  w.pod(static_cast<std::uint64_t>(ds.rows()));
  w.append(ds.values().data(), ds.values().size_bytes());

  std::map<std::string, std::uint32_t> table;
  for (const auto& l : ds.attack_labels()) table.emplace(l, 0);
  std::uint32_t next = 0;
  for (auto& [label, idx] : table) idx = next++;
  w.pod(static_cast<std::uint64_t>(table.size()));
  for (const auto& entry : table) w.str(entry.first);
  for (const auto& l : ds.attack_labels()) w.pod(table.at(l));

  Fnv1a h;
  h.update(w.buffer().data(), w.buffer().size());
  w.pod(h.digest());
  return std::move(w.buffer());
}

struct CacheContents {
  FlowDataset dataset;
  std::string notes;
};

inline CacheContents decode_cache(std::string_view bytes) {
  if (bytes.size() < kCacheMagic.size() + sizeof(std::uint64_t) ||
      bytes.substr(0, kCacheMagic.size()) != kCacheMagic) {
    fail(Errc::malformed_file, "not a dataset cache file");
  }
  Fnv1a h;
  h.update(bytes.data(), bytes.size() - sizeof(std::uint64_t));
  std::uint64_t stored = 0;
  std::memcpy(&stored, bytes.data() + bytes.size() - sizeof stored, sizeof stored);
  if (stored != h.digest()) fail(Errc::malformed_file, "dataset cache checksum mismatch");

  detail::ByteReader r(bytes.substr(0, bytes.size() - sizeof(std::uint64_t)));
  std::string magic(kCacheMagic.size(), '\0');
  r.take(magic.data(), magic.size());
  const auto version = r.pod<std::uint32_t>();
  if (version != kCacheVersion) fail(Errc::malformed_file, "unsupported cache version " + std::to_string(version));
  FlowSchema schema;
  schema.label_column = r.str();
  std::string benign = r.str();
  CacheContents out;
  out.notes = r.str();
  const auto n_features = r.pod<std::uint64_t>();
  for (std::uint64_t j = 0; j < n_features; ++j) schema.feature_names.push_back(r.str());
  const auto n_rows = r.pod<std::uint64_t>();
  if (n_features != 0 && n_rows > r.remaining() / sizeof(double) / n_features) {
    fail(Errc::malformed_file, "dataset cache truncated");
  }
  std::vector<double> values(n_rows * n_features);
  r.take(values.data(), values.size() * sizeof(double));
  const auto n_labels = r.pod<std::uint64_t>();
  std::vector<std::string> table;
  for (std::uint64_t k = 0; k < n_labels; ++k) table.push_back(r.str());
  std::vector<std::string> labels;
  labels.reserve(n_rows);
  for (std::uint64_t i = 0; i < n_rows; ++i) {
    const auto idx = r.pod<std::uint32_t>();
    if (idx >= table.size()) fail(Errc::malformed_file, "label index out of range");
    labels.push_back(table[idx]);
  }
  if (r.remaining() != 0) fail(Errc::malformed_file, "trailing bytes in dataset cache");
  out.dataset = FlowDataset(std::move(schema), std::move(values), std::move(labels), std::move(benign));
  return out;
}

inline void save_cache(const FlowDataset& ds, const std::filesystem::path& path, std::string_view notes = {}) {
  const std::string bytes = encode_cache(ds, notes);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io_failure, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(Errc::io_failure, "write failed: " + path.string());
}

inline CacheContents load_cache(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(Errc::missing_file, "missing file: " + path.string());
  return decode_cache(detail::read_file(path));
}

}  // namespace cianids
