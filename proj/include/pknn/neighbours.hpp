#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pknn/dataset.hpp"
#include "pknn/error.hpp"

namespace pknn {

enum class NeighbourRule { Asymmetric, BoltzmannSymmetric, Boltzmann2 };

inline std::string_view to_string(NeighbourRule rule) {
  switch (rule) {
    case NeighbourRule::Asymmetric:
      return "asymmetric";
    case NeighbourRule::BoltzmannSymmetric:
      return "boltzmann";
    case NeighbourRule::Boltzmann2:
      return "boltzmann2";
  }
  return "?";
}

inline NeighbourRule parse_rule(std::string_view name) {
  if (name == "asymmetric" || name == "asym") return NeighbourRule::Asymmetric;
  if (name == "boltzmann" || name == "symmetric") return NeighbourRule::BoltzmannSymmetric;
  if (name == "boltzmann2") return NeighbourRule::Boltzmann2;
  throw InputError("unknown neighbour rule '" + std::string(name) + "'");
}

/// Per-site neighbour sets, each sorted by site index.
///
/// `neighbours` holds ne(i): the k nearest sites for Asymmetric and
/// BoltzmannSymmetric, the undirected closure for Boltzmann2. `incoming` is
/// only filled for BoltzmannSymmetric and holds {j : i in ne(j)}.
struct NeighbourGraph {
  std::vector<std::vector<std::size_t>> neighbours;
  std::vector<std::vector<std::size_t>> incoming;
  std::size_t k = 0;
  NeighbourRule rule = NeighbourRule::Asymmetric;

  std::size_t size() const { return neighbours.size(); }

  bool operator==(const NeighbourGraph&) const = default;
};

/// Sorted-distance cache: for every site, all other sites ordered by
/// (distance, site index). Graphs of any k and rule are read off its prefixes.
class NeighbourIndex {
 public:
  explicit NeighbourIndex(std::vector<FeatureVector> points) : points_(std::move(points)) {
    const auto& pts = points_;
    const std::size_t n = pts.size();
    order_.resize(n);
    dist_.resize(n);
    std::vector<std::pair<double, std::size_t>> row;
    for (std::size_t i = 0; i < n; ++i) {
      row.clear();
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) row.emplace_back(euclidean_distance(pts[i], pts[j]), j);
      }
      std::sort(row.begin(), row.end());
      order_[i].reserve(row.size());
      dist_[i].reserve(row.size());
      for (const auto& [d, j] : row) {
        order_[i].push_back(j);
        dist_[i].push_back(d);
      }
    }
  }

  explicit NeighbourIndex(const LabeledDataset& data) : NeighbourIndex(data.points()) {}

  std::size_t size() const { return order_.size(); }

  /// Ordered neighbours of a site, nearest first.
  std::span<const std::size_t> order(std::size_t site) const { return order_[site]; }

  /// Index over the sites plus `y` appended as site N. Equivalent to a full
  /// rebuild because the new site carries the largest index and so sorts last
  /// among equal distances.
  NeighbourIndex with_point(std::span<const double> y) const {
    const std::size_t n = size();
    if (n > 0 && points_[0].size() != y.size()) {
      throw InputError("test point dimension " + std::to_string(y.size()) +
                       " does not match dataset dimension " + std::to_string(points_[0].size()));
    }
    NeighbourIndex out;
    out.points_ = points_;
    out.points_.emplace_back(y.begin(), y.end());
    out.order_.resize(n + 1);
    out.dist_.resize(n + 1);
    std::vector<std::pair<double, std::size_t>> row;
    row.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = euclidean_distance(points_[i], y);
      row.emplace_back(d, i);
      const auto& di = dist_[i];
      const auto pos = static_cast<std::size_t>(std::upper_bound(di.begin(), di.end(), d) - di.begin());
      auto& oi = out.order_[i];
      auto& ni = out.dist_[i];
      oi.reserve(n);
      ni.reserve(n);
      oi.assign(order_[i].begin(), order_[i].begin() + static_cast<std::ptrdiff_t>(pos));
      ni.assign(di.begin(), di.begin() + static_cast<std::ptrdiff_t>(pos));
      oi.push_back(n);
      ni.push_back(d);
      oi.insert(oi.end(), order_[i].begin() + static_cast<std::ptrdiff_t>(pos), order_[i].end());
      ni.insert(ni.end(), di.begin() + static_cast<std::ptrdiff_t>(pos), di.end());
    }
    std::sort(row.begin(), row.end());
    for (const auto& [d, j] : row) {
      out.order_[n].push_back(j);
      out.dist_[n].push_back(d);
    }
    return out;
  }

  /// Neighbour graph for order k under `rule`; requires 1 <= k <= size()-1.
  NeighbourGraph graph(std::size_t k, NeighbourRule rule) const {
    const std::size_t n = size();
    if (k < 1 || k + 1 > n) {
      throw InputError("neighbour count k=" + std::to_string(k) + " outside [1, " +
                       std::to_string(n == 0 ? 0 : n - 1) + "]");
    }
    NeighbourGraph g;
    g.k = k;
    g.rule = rule;
    g.neighbours.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      g.neighbours[i].assign(order_[i].begin(), order_[i].begin() + static_cast<std::ptrdiff_t>(k));
    }
    if (rule == NeighbourRule::BoltzmannSymmetric) {
      g.incoming.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j : g.neighbours[i]) g.incoming[j].push_back(i);
      }
    } else if (rule == NeighbourRule::Boltzmann2) {
      auto directed = g.neighbours;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j : directed[i]) g.neighbours[j].push_back(i);
      }
    }
    for (auto& s : g.neighbours) {
      std::sort(s.begin(), s.end());
      s.erase(std::unique(s.begin(), s.end()), s.end());
    }
    // incoming lists are filled in increasing i and so already sorted
    return g;
  }

 private:
  NeighbourIndex() = default;

  std::vector<FeatureVector> points_;
  std::vector<std::vector<std::size_t>> order_;
  std::vector<std::vector<double>> dist_;
};

/// Neighbour graph of `data` for order k. Throws InputError unless 1 <= k <= N-1.
inline NeighbourGraph build_neighbour_graph(const LabeledDataset& data, std::size_t k,
                                            NeighbourRule rule) {
  return NeighbourIndex(data).graph(k, rule);
}

/// The graph `build_neighbour_graph` would give on `data` with `y_new`
/// appended as site N, reusing the order and rule of `graph`.
inline NeighbourGraph insert_test_point(const NeighbourGraph& graph, const LabeledDataset& data,
                                        std::span<const double> y_new) {
  if (y_new.size() != data.dim()) {
    throw InputError("test point dimension " + std::to_string(y_new.size()) +
                     " does not match dataset dimension " + std::to_string(data.dim()));
  }
  return NeighbourIndex(data).with_point(y_new).graph(graph.k, graph.rule);
}

}  // namespace pknn
