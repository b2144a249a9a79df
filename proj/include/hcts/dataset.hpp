#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"
#include "random.hpp"

namespace hcts {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// N fixed-length univariate series with contiguous class labels.
///
/// `class_names[k]` keeps the label token that class index k had in the
/// source file, so reports can show the archive's original labels.
struct TimeSeriesDataset {
  std::string name;
  Matrix values;  // N x L
  std::vector<int> labels;
  int num_classes = 0;
  std::vector<std::string> class_names;

  std::size_t size() const { return labels.size(); }
  std::size_t length() const { return static_cast<std::size_t>(values.cols()); }
  std::span<const double> series(std::size_t i) const {
    return {values.data() + i * length(), length()};
  }
};

/// Checks the dataset invariants; throws DomainError on the first violation.
/// `min_classes` is 3 for archive data and 2 for internal slices.
inline void validate(const TimeSeriesDataset& ds, int min_classes = 3) {
  if (ds.values.rows() != static_cast<Eigen::Index>(ds.labels.size()))
    throw DomainError("dataset '" + ds.name + "': row count does not match label count");
  if (ds.size() == 0 || ds.length() == 0) throw DomainError("dataset '" + ds.name + "' is empty");
  if (ds.num_classes < min_classes)
    throw DomainError("multi-class required: dataset '" + ds.name + "' has " + std::to_string(ds.num_classes) +
                      " classes");
  if (!ds.values.allFinite()) throw DomainError("dataset '" + ds.name + "' contains non-finite values");
  std::vector<int> count(ds.num_classes, 0);
  for (int y : ds.labels) {
    if (y < 0 || y >= ds.num_classes) throw DomainError("label " + std::to_string(y) + " out of range");
    ++count[y];
  }
  for (int k = 0; k < ds.num_classes; ++k)
    if (count[k] == 0) throw DomainError("class " + std::to_string(k) + " has no samples");
}

/// Class index -> ascending sample indices. Empty classes map to empty lists.
inline std::vector<std::vector<std::size_t>> class_partition(const TimeSeriesDataset& ds) {
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(std::max(ds.num_classes, 0)));
  for (std::size_t i = 0; i < ds.size(); ++i) out.at(static_cast<std::size_t>(ds.labels[i])).push_back(i);
  return out;
}

inline std::vector<std::size_t> class_counts(const TimeSeriesDataset& ds) {
  std::vector<std::size_t> out(static_cast<std::size_t>(ds.num_classes), 0);
  for (int y : ds.labels) ++out[static_cast<std::size_t>(y)];
  return out;
}

/// Rows `indices` of `ds`, in that order. Class indexing is unchanged, so
/// some classes may be empty in the result.
inline TimeSeriesDataset subset(const TimeSeriesDataset& ds, std::span<const std::size_t> indices) {
  TimeSeriesDataset out;
  out.name = ds.name;
  out.num_classes = ds.num_classes;
  out.class_names = ds.class_names;
  out.values.resize(static_cast<Eigen::Index>(indices.size()), ds.values.cols());
  out.labels.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    out.values.row(static_cast<Eigen::Index>(r)) = ds.values.row(static_cast<Eigen::Index>(indices[r]));
    out.labels.push_back(ds.labels[indices[r]]);
  }
  return out;
}

/// Samples of the listed classes only, relabeled 0..k-1 in the given order.
inline TimeSeriesDataset select_classes(const TimeSeriesDataset& ds, std::span<const int> classes) {
  std::vector<int> remap(static_cast<std::size_t>(ds.num_classes), -1);
  for (std::size_t k = 0; k < classes.size(); ++k) remap.at(static_cast<std::size_t>(classes[k])) = static_cast<int>(k);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (remap[static_cast<std::size_t>(ds.labels[i])] >= 0) keep.push_back(i);
  TimeSeriesDataset out = subset(ds, keep);
  out.num_classes = static_cast<int>(classes.size());
  out.class_names.clear();
  for (int k : classes)
    out.class_names.push_back(static_cast<std::size_t>(k) < ds.class_names.size() ? ds.class_names[k] : std::to_string(k));
  for (int& y : out.labels) y = remap[static_cast<std::size_t>(y)];
  return out;
}

/// (x - mean) / sd with the population standard deviation; all zeros when
/// sd < 1e-8.
inline std::vector<double> znormalize(std::span<const double> series) {
  std::vector<double> out(series.size(), 0.0);
  if (series.empty()) return out;
  const double n = static_cast<double>(series.size());
  const double mean = std::accumulate(series.begin(), series.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : series) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / n);
  if (sd < 1e-8) return out;
  for (std::size_t i = 0; i < series.size(); ++i) out[i] = (series[i] - mean) / sd;
  return out;
}

inline void znormalize_rows(TimeSeriesDataset& ds) {
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto z = znormalize(ds.series(i));
    std::copy(z.begin(), z.end(), ds.values.data() + i * ds.length());
  }
}

namespace detail {

inline double parse_double(std::string_view tok, std::size_t line, std::size_t field, const std::string& file) {
  while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\r')) tok.remove_prefix(1);
  while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\r')) tok.remove_suffix(1);
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (tok.empty() || ec != std::errc{} || ptr != tok.data() + tok.size())
    throw ParseError(file + ":" + std::to_string(line) + ": field " + std::to_string(field) +
                     ": cannot parse '" + std::string(tok) + "' as a number");
  return v;
}

inline std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace detail

struct LoadOptions {
  int min_classes = 3;
  bool znormalize = false;
};

/// Loads and concatenates UCR-layout files (`label<TAB>v1<TAB>...<TAB>vL`,
/// or comma-separated when the first line has no tab). Labels are remapped
/// to 0..c-1 by ascending numeric value over the union of all files; row
/// order is preserved.
inline TimeSeriesDataset load_ucr_files(std::span<const std::filesystem::path> paths, LoadOptions opts = {}) {
  if (paths.empty()) throw DomainError("no dataset files given");
  std::vector<double> raw_labels;
  std::vector<std::string> label_tokens;
  std::vector<double> values;
  std::size_t length = 0;
  for (const auto& path : paths) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open '" + path.string() + "'");
    const std::string file = path.string();
    std::string line;
    std::size_t lineno = 0;
    char delim = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (detail::trim(line).empty()) continue;
      if (delim == 0) delim = line.find('\t') != std::string::npos ? '\t' : ',';
      std::vector<std::string_view> fields;
      std::string_view rest(line);
      while (true) {
        auto pos = rest.find(delim);
        fields.push_back(rest.substr(0, pos));
        if (pos == std::string_view::npos) break;
        rest.remove_prefix(pos + 1);
      }
      while (fields.size() > 1 && detail::trim(fields.back()).empty()) fields.pop_back();
      if (fields.size() < 2) throw FormatError(file + ":" + std::to_string(lineno) + ": no values after the label");
      const std::size_t l = fields.size() - 1;
      if (length == 0) length = l;
      if (l != length)
        throw FormatError(file + ":" + std::to_string(lineno) + ": ragged row, expected " + std::to_string(length) +
                          " values but found " + std::to_string(l));
      raw_labels.push_back(detail::parse_double(fields[0], lineno, 1, file));
      label_tokens.push_back(detail::trim(fields[0]));
      for (std::size_t f = 1; f < fields.size(); ++f) values.push_back(detail::parse_double(fields[f], lineno, f + 1, file));
    }
  }
  if (raw_labels.empty()) throw FormatError("'" + paths.front().string() + "' contains no series");

  std::map<double, std::string> distinct;
  for (std::size_t i = 0; i < raw_labels.size(); ++i) distinct.emplace(raw_labels[i], label_tokens[i]);

  TimeSeriesDataset ds;
  ds.name = paths.front().stem().string();
  for (const char* suffix : {"_TRAIN", "_TEST"})
    if (ds.name.ends_with(suffix)) ds.name.resize(ds.name.size() - std::string_view(suffix).size());
  ds.num_classes = static_cast<int>(distinct.size());
  std::map<double, int> index;
  for (const auto& [value, token] : distinct) {
    index.emplace(value, static_cast<int>(ds.class_names.size()));
    ds.class_names.push_back(token);
  }
  if (ds.num_classes < opts.min_classes)
    throw DomainError("multi-class required: '" + paths.front().string() + "' has " +
                      std::to_string(ds.num_classes) + " distinct labels");
  ds.labels.reserve(raw_labels.size());
  for (double y : raw_labels) ds.labels.push_back(index.at(y));
  ds.values = Eigen::Map<const Matrix>(values.data(), static_cast<Eigen::Index>(raw_labels.size()),
                                       static_cast<Eigen::Index>(length));
  if (opts.znormalize) znormalize_rows(ds);
  validate(ds, opts.min_classes);
  return ds;
}

inline TimeSeriesDataset load_ucr_tsv(const std::filesystem::path& path, LoadOptions opts = {}) {
  return load_ucr_files(std::span<const std::filesystem::path>(&path, 1), opts);
}

/// Writes the tab-separated layout with shortest round-trip number text.
inline void write_ucr_tsv(const TimeSeriesDataset& ds, std::ostream& out) {
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto y = static_cast<std::size_t>(ds.labels[i]);
    out << (y < ds.class_names.size() ? ds.class_names[y] : std::to_string(y));
    for (double v : ds.series(i)) out << '\t' << detail::format_double(v);
    out << '\n';
  }
}

inline void write_ucr_tsv(const TimeSeriesDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
  write_ucr_tsv(ds, out);
}

/// Stratified fold assignment.
struct FoldPlan {
  int k = 0;
  std::vector<int> assignment;
  std::uint64_t seed = 0;

  std::vector<std::size_t> test_indices(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i)
      if (assignment[i] == fold) out.push_back(i);
    return out;
  }
  std::vector<std::size_t> train_indices(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i)
      if (assignment[i] != fold) out.push_back(i);
    return out;
  }
};

/// Each class is shuffled with its own seeded stream and dealt round-robin
/// into folds, continuing where the previous class stopped so that overall
/// fold sizes stay balanced too.
inline FoldPlan stratified_kfold(std::span<const int> labels, int num_classes, int k, std::uint64_t seed) {
  if (k < 2) throw DomainError("k-fold requires k >= 2");
  if (static_cast<std::size_t>(k) > labels.size())
    throw DomainError("k=" + std::to_string(k) + " exceeds the number of samples (" + std::to_string(labels.size()) + ")");
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) members.at(static_cast<std::size_t>(labels[i])).push_back(i);
  FoldPlan plan{k, std::vector<int>(labels.size(), -1), seed};
  std::size_t offset = 0;
  for (std::size_t c = 0; c < members.size(); ++c) {
    auto rng = make_rng(seed, {0x6b666f6c64ULL, c});
    shuffle(members[c], rng);
    for (std::size_t t = 0; t < members[c].size(); ++t)
      plan.assignment[members[c][t]] = static_cast<int>((offset + t) % static_cast<std::size_t>(k));
    offset += members[c].size();
  }
  return plan;
}

inline FoldPlan stratified_kfold(const TimeSeriesDataset& ds, int k, std::uint64_t seed) {
  return stratified_kfold(ds.labels, ds.num_classes, k, seed);
}

}  // namespace hcts
