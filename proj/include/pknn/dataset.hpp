#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pknn/error.hpp"

namespace pknn {

using FeatureVector = std::vector<double>;
using Label = int;

/// Euclidean (L2) distance. Throws InputError on a dimension mismatch.
inline double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw InputError("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    sum += diff * diff;
  }
  return std::sqrt(sum);
}

/// N labelled feature vectors of a common dimension, with labels in [0, C).
class LabeledDataset {
 public:
  LabeledDataset() = default;

  LabeledDataset(std::vector<FeatureVector> points, std::vector<Label> labels, int class_count,
                 std::vector<std::string> class_names = {})
      : points_(std::move(points)),
        labels_(std::move(labels)),
        class_count_(class_count),
        class_names_(std::move(class_names)) {
    if (points_.empty()) throw InputError("dataset must contain at least one point");
    if (points_.size() != labels_.size()) {
      throw InputError("points and labels differ in length");
    }
    if (class_count_ < 1) throw InputError("class count must be positive");
    dim_ = points_.front().size();
    if (dim_ == 0) throw InputError("feature dimension must be positive");
    for (std::size_t i = 0; i < points_.size(); ++i) {
      if (points_[i].size() != dim_) {
        throw InputError("point " + std::to_string(i) + " has dimension " +
                         std::to_string(points_[i].size()) + ", expected " +
                         std::to_string(dim_));
      }
      if (labels_[i] < 0 || labels_[i] >= class_count_) {
        throw InputError("label out of range at point " + std::to_string(i));
      }
    }
    if (!class_names_.empty() && class_names_.size() != static_cast<std::size_t>(class_count_)) {
      throw InputError("class name count does not match class count");
    }
  }

  std::size_t size() const { return points_.size(); }
  std::size_t dim() const { return dim_; }
  int class_count() const { return class_count_; }

  const std::vector<FeatureVector>& points() const { return points_; }
  const std::vector<Label>& labels() const { return labels_; }
  const FeatureVector& point(std::size_t i) const { return points_[i]; }
  Label label(std::size_t i) const { return labels_[i]; }
  const std::vector<std::string>& class_names() const { return class_names_; }

  /// Rows selected by index, keeping the class alphabet.
  LabeledDataset subset(std::span<const std::size_t> rows) const {
    std::vector<FeatureVector> pts;
    std::vector<Label> lab;
    pts.reserve(rows.size());
    lab.reserve(rows.size());
    for (std::size_t r : rows) {
      pts.push_back(points_.at(r));
      lab.push_back(labels_.at(r));
    }
    return LabeledDataset(std::move(pts), std::move(lab), class_count_, class_names_);
  }

  /// Appends one labelled point.
  LabeledDataset with_point(FeatureVector y, Label z) const {
    auto pts = points_;
    auto lab = labels_;
    pts.push_back(std::move(y));
    lab.push_back(z);
    return LabeledDataset(std::move(pts), std::move(lab), class_count_, class_names_);
  }

  /// Keeps only the listed feature columns.
  LabeledDataset select_features(std::span<const std::size_t> columns) const {
    std::vector<FeatureVector> pts;
    pts.reserve(points_.size());
    for (const auto& p : points_) {
      FeatureVector q;
      q.reserve(columns.size());
      for (std::size_t c : columns) q.push_back(p.at(c));
      pts.push_back(std::move(q));
    }
    return LabeledDataset(std::move(pts), labels_, class_count_, class_names_);
  }

 private:
  std::vector<FeatureVector> points_;
  std::vector<Label> labels_;
  int class_count_ = 0;
  std::size_t dim_ = 0;
  std::vector<std::string> class_names_;
};

}  // namespace pknn
