#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "spikelda/common.hpp"
#include "spikelda/rng.hpp"

namespace spikelda {

// n x p feature matrix with one class label per row. Labels are opaque
// strings; class ordinals follow the lexicographic order of the distinct
// labels, which also fixes which class plays "class 1" in the classifiers.
struct LabeledDataset {
  Matrix features;
  std::vector<std::string> labels;
  std::vector<std::string> class_names;   // sorted lexicographically
  std::vector<int> label_ordinal;         // per row, index into class_names
  std::vector<int> class_counts;
  std::vector<std::string> feature_names; // empty, or size p

  Index n() const { return features.rows(); }
  Index p() const { return features.cols(); }
  int n_classes() const { return static_cast<int>(class_names.size()); }

  static LabeledDataset create(Matrix features, std::vector<std::string> labels,
                               std::vector<std::string> feature_names = {}) {
    LabeledDataset ds;
    if (features.rows() < 2) throw ValidationError("dataset: need n >= 2 rows");
    if (features.cols() < 1) throw ValidationError("dataset: need p >= 1 features");
    if (static_cast<Index>(labels.size()) != features.rows())
      throw ValidationError("dataset: labels size does not match row count");
    if (!features.allFinite()) throw ValidationError("dataset: non-finite feature value");
    if (!feature_names.empty() &&
        static_cast<Index>(feature_names.size()) != features.cols())
      throw ValidationError("dataset: feature_names size does not match p");
    ds.features = std::move(features);
    ds.labels = std::move(labels);
    ds.feature_names = std::move(feature_names);
    std::map<std::string, int> order;
    for (const auto& l : ds.labels) order.emplace(l, 0);
    int ord = 0;
    for (auto& [name, o] : order) {
      o = ord++;
      ds.class_names.push_back(name);
    }
    ds.class_counts.assign(ds.class_names.size(), 0);
    ds.label_ordinal.reserve(ds.labels.size());
    for (const auto& l : ds.labels) {
      int o = order.at(l);
      ds.label_ordinal.push_back(o);
      ds.class_counts[o]++;
    }
    return ds;
  }

  LabeledDataset subset(const std::vector<int>& rows) const {
    Matrix f(static_cast<Index>(rows.size()), p());
    std::vector<std::string> l;
    l.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      f.row(static_cast<Index>(i)) = features.row(rows[i]);
      l.push_back(labels[rows[i]]);
    }
    return create(std::move(f), std::move(l), feature_names);
  }

  std::vector<std::vector<int>> indices_by_class() const {
    std::vector<std::vector<int>> out(class_names.size());
    for (Index i = 0; i < n(); ++i)
      out[label_ordinal[static_cast<std::size_t>(i)]].push_back(static_cast<int>(i));
    return out;
  }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_cell(const std::string& s, std::size_t row, const std::string& col) {
  auto fail = [&](const char* why) -> ParseError {
    return ParseError("csv: " + std::string(why) + " at row " + std::to_string(row) +
                      ", column '" + col + "' (value '" + s + "')");
  };
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
  if (b == e) throw fail("empty cell");
  double v = 0.0;
  auto res = std::from_chars(s.data() + b, s.data() + e, v);
  if (res.ec != std::errc() || res.ptr != s.data() + e) throw fail("unparseable number");
  if (!std::isfinite(v)) throw fail("non-finite value");
  return v;
}

inline std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

// Reads a UTF-8, comma-separated file with a header row. Every non-label
// column is parsed as a real in header order; row order is preserved.
// No quoting rules: cells must not contain commas.
inline LabeledDataset load_csv(const std::string& path,
                               const std::string& label_column = "label") {
  std::ifstream in(path);
  if (!in) throw ParseError("csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ParseError("csv: empty file '" + path + "'");
  const auto header = detail::split_csv_line(line);
  for (std::size_t i = 0; i < header.size(); ++i)
    for (std::size_t j = i + 1; j < header.size(); ++j)
      if (header[i] == header[j])
        throw SchemaError("csv: duplicate column name '" + header[i] + "'");
  std::size_t label_idx = header.size();
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == label_column) label_idx = i;
  if (label_idx == header.size())
    throw SchemaError("csv: label column '" + label_column + "' not in header");

  std::vector<std::string> feature_names;
  for (std::size_t i = 0; i < header.size(); ++i)
    if (i != label_idx) feature_names.push_back(header[i]);

  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw ParseError("csv: row " + std::to_string(lineno) + " has " +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(header.size()));
    std::vector<double> r;
    r.reserve(header.size() - 1);
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i == label_idx) {
        labels.push_back(cells[i]);
      } else {
        r.push_back(detail::parse_cell(cells[i], lineno, header[i]));
      }
    }
    rows.push_back(std::move(r));
  }
  if (rows.size() < 2) throw ParseError("csv: need at least 2 data rows");
  Matrix f(static_cast<Index>(rows.size()), static_cast<Index>(feature_names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      f(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return LabeledDataset::create(std::move(f), std::move(labels), std::move(feature_names));
}

// Writes features at 17 significant digits so that load_csv(save_csv(ds))
// reproduces every double bit-exactly. Label column goes last.
inline void save_csv(const LabeledDataset& ds, const std::string& path,
                     const std::string& label_column = "label") {
  std::ofstream out(path);
  if (!out) throw Error("csv: cannot write '" + path + "'");
  for (Index j = 0; j < ds.p(); ++j) {
    out << (ds.feature_names.empty() ? "f" + std::to_string(j + 1) : ds.feature_names[j]);
    out << ',';
  }
  out << label_column << '\n';
  for (Index i = 0; i < ds.n(); ++i) {
    for (Index j = 0; j < ds.p(); ++j) out << detail::format_g17(ds.features(i, j)) << ',';
    out << ds.labels[static_cast<std::size_t>(i)] << '\n';
  }
}

// Deterministic split; the stratified option keeps class proportions within
// one sample per class. Throws SplitError if any class ends up empty on
// either side.
inline std::pair<LabeledDataset, LabeledDataset> train_test_split(
    const LabeledDataset& ds, double test_fraction, std::uint64_t seed, bool stratified) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw RangeError("train_test_split: test_fraction must be in (0, 1)");
  std::vector<int> test_rows, train_rows;
  Rng rng(seed);
  if (stratified) {
    auto by_class = ds.indices_by_class();
    for (std::size_t c = 0; c < by_class.size(); ++c) {
      auto idx = by_class[c];
      Rng r = rng.child(c);
      r.shuffle(idx);
      const auto n_test = static_cast<std::size_t>(
          std::llround(test_fraction * static_cast<double>(idx.size())));
      for (std::size_t i = 0; i < idx.size(); ++i)
        (i < n_test ? test_rows : train_rows).push_back(idx[i]);
    }
  } else {
    std::vector<int> idx(static_cast<std::size_t>(ds.n()));
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    rng.shuffle(idx);
    const auto n_test = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(idx.size())));
    for (std::size_t i = 0; i < idx.size(); ++i)
      (i < n_test ? test_rows : train_rows).push_back(idx[i]);
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  if (train_rows.size() < 2 || test_rows.size() < 2)
    throw SplitError("train_test_split: a side has fewer than 2 rows");
  auto train = ds.subset(train_rows);
  auto test = ds.subset(test_rows);
  if (train.n_classes() != ds.n_classes() || test.n_classes() != ds.n_classes())
    throw SplitError("train_test_split: split emptied a class");
  return {std::move(train), std::move(test)};
}

}  // namespace spikelda
