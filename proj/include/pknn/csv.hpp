#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pknn/dataset.hpp"
#include "pknn/error.hpp"

namespace pknn {

struct CsvOptions {
  bool has_header = true;
  /// Column name (header required) or 0-based index; empty means the last column.
  std::string label_column{};
  /// z-score every feature with this file's own statistics.
  bool standardize = false;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  bool quoted = false;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i < line.size() && line[i] == '"') quoted = !quoted;
    if (i == line.size() || (line[i] == ',' && !quoted)) {
      out.emplace_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

inline bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace detail

/// Per-feature z-scoring with statistics from one dataset (a training fold).
class Standardizer {
 public:
  Standardizer() = default;

  explicit Standardizer(const std::vector<FeatureVector>& points) {
    const std::size_t d = points.at(0).size();
    const double n = static_cast<double>(points.size());
    mean_.assign(d, 0.0);
    sd_.assign(d, 0.0);
    for (const auto& p : points)
      for (std::size_t j = 0; j < d; ++j) mean_[j] += p[j] / n;
    for (const auto& p : points)
      for (std::size_t j = 0; j < d; ++j) sd_[j] += (p[j] - mean_[j]) * (p[j] - mean_[j]);
    for (double& s : sd_) {
      s = points.size() > 1 ? std::sqrt(s / (n - 1.0)) : 0.0;
      if (!(s > 0.0)) s = 1.0;  // constant feature
    }
  }

  FeatureVector apply(const FeatureVector& p) const {
    FeatureVector q(p.size());
    for (std::size_t j = 0; j < p.size(); ++j) q[j] = (p[j] - mean_[j]) / sd_[j];
    return q;
  }

  LabeledDataset apply(const LabeledDataset& data) const {
    std::vector<FeatureVector> pts;
    pts.reserve(data.size());
    for (const auto& p : data.points()) pts.push_back(apply(p));
    return LabeledDataset(std::move(pts), data.labels(), data.class_count(), data.class_names());
  }

 private:
  std::vector<double> mean_, sd_;
};

/// Parses a dataset CSV: numeric feature columns plus one categorical label
/// column. Labels map to 0-based indices in order of first appearance.
/// Throws InputError (with the 1-based line number) on malformed content and
/// IoError when the file cannot be opened.
inline LabeledDataset parse_csv(std::istream& in, const CsvOptions& options = {},
                                const std::string& source = "<stream>") {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  std::size_t width = 0;
  std::size_t label_col = 0;

  auto resolve_label = [&](std::size_t ncols) {
    if (options.label_column.empty()) {
      label_col = ncols - 1;
    } else {
      std::size_t idx = 0;
      const auto& lc = options.label_column;
      const auto r = std::from_chars(lc.data(), lc.data() + lc.size(), idx);
      if (r.ec == std::errc() && r.ptr == lc.data() + lc.size()) {
        label_col = idx;
      } else {
        bool found = false;
        for (std::size_t i = 0; i < header.size(); ++i) {
          if (header[i] == lc) {
            label_col = i;
            found = true;
            break;
          }
        }
        if (!found) throw InputError(source + ": unknown label column '" + lc + "'");
      }
    }
    if (label_col >= ncols) throw InputError(source + ": label column index out of range");
  };

  std::vector<FeatureVector> points;
  std::vector<Label> labels;
  std::vector<std::string> names;
  std::map<std::string, Label> label_ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split_csv_line(line);
    if (width == 0) {
      width = cells.size();
      if (width < 2) throw InputError(source + ":" + std::to_string(line_no) + ": need at least one feature and a label");
      if (options.has_header) {
        header = cells;
        resolve_label(width);
        continue;
      }
      resolve_label(width);
    }
    if (cells.size() != width) {
      throw InputError(source + ":" + std::to_string(line_no) + ": expected " + std::to_string(width) +
                       " columns, found " + std::to_string(cells.size()));
    }
    FeatureVector p;
    p.reserve(width - 1);
    for (std::size_t i = 0; i < width; ++i) {
      if (i == label_col) continue;
      double v = 0.0;
      if (!detail::parse_double(cells[i], v)) {
        throw InputError(source + ":" + std::to_string(line_no) + ": non-numeric feature '" + cells[i] +
                         "' in column " + std::to_string(i));
      }
      p.push_back(v);
    }
    const auto [it, inserted] = label_ids.emplace(cells[label_col], static_cast<Label>(names.size()));
    if (inserted) names.push_back(cells[label_col]);
    labels.push_back(it->second);
    points.push_back(std::move(p));
  }
  if (points.empty()) throw InputError(source + ": no data rows");
  const auto class_count = static_cast<int>(names.size());
  LabeledDataset data(std::move(points), std::move(labels), class_count, std::move(names));
  if (options.standardize) data = Standardizer(data.points()).apply(data);
  return data;
}

inline LabeledDataset load_csv(const std::string& path, const CsvOptions& options = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return parse_csv(in, options, path);
}

/// Feature rows of a CSV without labels (every column numeric).
inline std::vector<FeatureVector> load_feature_csv(const std::string& path, bool has_header = true) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<FeatureVector> rows;
  std::string line;
  std::size_t line_no = 0, width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    if (has_header && line_no == 1) continue;
    const auto cells = detail::split_csv_line(line);
    if (width == 0) width = cells.size();
    if (cells.size() != width) throw InputError(path + ":" + std::to_string(line_no) + ": ragged row");
    FeatureVector p;
    for (const auto& c : cells) {
      double v = 0.0;
      if (!detail::parse_double(c, v)) {
        throw InputError(path + ":" + std::to_string(line_no) + ": non-numeric value '" + c + "'");
      }
      p.push_back(v);
    }
    rows.push_back(std::move(p));
  }
  if (rows.empty()) throw InputError(path + ": no data rows");
  return rows;
}

}  // namespace pknn
