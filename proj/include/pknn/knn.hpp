#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pknn/dataset.hpp"
#include "pknn/error.hpp"
#include "pknn/neighbours.hpp"

namespace pknn {

struct KnnConfig {
  std::size_t k = 1;
  NeighbourRule rule = NeighbourRule::Asymmetric;
};

/// Majority votes of one test point for any k, read off a training index
/// with the test point inserted as the last site.
///
/// The vote tallies the rule's agreement counts at the test site: its k
/// nearest for Asymmetric, those plus the sites that count it among their k
/// nearest (mutual ones twice) for BoltzmannSymmetric, and the undirected
/// neighbour set for Boltzmann2.
class KnnVoter {
 public:
  KnnVoter(const NeighbourIndex& train_index, std::span<const Label> train_labels, int class_count,
           std::span<const double> y_new)
      : index_(train_index.with_point(y_new)),
        labels_(train_labels.begin(), train_labels.end()),
        class_count_(class_count) {
    const std::size_t site = labels_.size();
    rank_.resize(site);
    for (std::size_t j = 0; j < site; ++j) {
      const auto ord = index_.order(j);
      rank_[j] = static_cast<std::size_t>(std::find(ord.begin(), ord.end(), site) - ord.begin());
    }
  }

  std::vector<int> scores(std::size_t k, NeighbourRule rule) const {
    const std::size_t n = labels_.size();
    if (k < 1 || k > n) throw InputError("knn: k=" + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
    std::vector<int> s(static_cast<std::size_t>(class_count_), 0);
    const auto ord = index_.order(n);
    std::vector<bool> out(n, false);
    for (std::size_t i = 0; i < k; ++i) {
      ++s[static_cast<std::size_t>(labels_[ord[i]])];
      out[ord[i]] = true;
    }
    if (rule == NeighbourRule::Asymmetric) return s;
    for (std::size_t j = 0; j < n; ++j) {
      if (rank_[j] >= k) continue;
      if (rule == NeighbourRule::BoltzmannSymmetric || !out[j]) ++s[static_cast<std::size_t>(labels_[j])];
    }
    return s;
  }

  /// Majority label; ties go to the lowest class index.
  Label vote(std::size_t k, NeighbourRule rule) const {
    const auto s = scores(k, rule);
    return static_cast<Label>(std::max_element(s.begin(), s.end()) - s.begin());
  }

 private:
  NeighbourIndex index_;
  std::vector<Label> labels_;
  int class_count_;
  std::vector<std::size_t> rank_;
};

/// Majority-vote label of `y_new` among its rule-specific neighbours in the
/// training set extended by the test point.
inline Label knn_classify(const LabeledDataset& train, std::span<const double> y_new,
                          const KnnConfig& config) {
  if (y_new.size() != train.dim()) throw InputError("test point dimension mismatch");
  if (config.k < 1 || config.k > train.size()) throw InputError("knn: k out of range");
  return KnnVoter(NeighbourIndex(train), train.labels(), train.class_count(), y_new)
      .vote(config.k, config.rule);
}

}  // namespace pknn
