#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "pknn/dataset.hpp"
#include "pknn/error.hpp"
#include "pknn/neighbours.hpp"

namespace pknn {

/// log(sum(exp(x))) with max-subtraction. Returns -inf for an empty or all -inf input.
inline double log_sum_exp(std::span<const double> x) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : x) m = std::max(m, v);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

/// Normalizes log weights in place into probabilities.
inline void softmax_in_place(std::span<double> x) {
  const double lse = log_sum_exp(x);
  for (double& v : x) v = std::exp(v - lse);
}

/// Interaction strength and neighbour count. beta = 0 gives uniform site
/// distributions and is only meaningful for diagnostics.
struct InteractionParams {
  double beta = 1.0;
  std::size_t k = 1;
};

namespace detail {

inline void check_params(const InteractionParams& p) {
  if (!(p.beta >= 0.0) || !std::isfinite(p.beta)) throw InputError("beta must be finite and >= 0");
  if (p.k < 1) throw InputError("k must be positive");
}

inline void check_labels(std::span<const Label> labels, const NeighbourGraph& graph,
                         int class_count) {
  if (labels.size() != graph.size()) {
    throw InputError("label count " + std::to_string(labels.size()) + " != graph size " +
                     std::to_string(graph.size()));
  }
  if (class_count < 1) throw InputError("class count must be positive");
}

}  // namespace detail

/// Rule-specific agreement counts S(c) for one site: how many neighbours carry
/// class c. BoltzmannSymmetric adds the incoming edges {j : site in ne(j)} on top
/// of the outgoing ones, so mutual neighbours count twice.
inline void agreement_scores(std::span<const Label> labels, std::size_t site,
                             const NeighbourGraph& graph, std::span<int> scores) {
  std::fill(scores.begin(), scores.end(), 0);
  for (std::size_t j : graph.neighbours[site]) ++scores[static_cast<std::size_t>(labels[j])];
  if (graph.rule == NeighbourRule::BoltzmannSymmetric) {
    for (std::size_t j : graph.incoming[site]) ++scores[static_cast<std::size_t>(labels[j])];
  }
}

namespace detail {

inline double site_term(std::span<const int> scores, int own, double scale,
                        std::span<double> work) {
  for (std::size_t c = 0; c < scores.size(); ++c) work[c] = scale * scores[c];
  return scale * own - log_sum_exp(work);
}

}  // namespace detail

/// log p(z_site | z_ne(site), beta, K): the site's normalized conditional
/// probability with interaction beta/K times the agreement count.
inline double site_log_probability(std::span<const Label> labels, std::size_t site,
                                   const NeighbourGraph& graph, const InteractionParams& params,
                                   int class_count) {
  detail::check_params(params);
  detail::check_labels(labels, graph, class_count);
  if (site >= graph.size()) throw InputError("site index out of range");
  std::vector<int> scores(static_cast<std::size_t>(class_count));
  std::vector<double> work(scores.size());
  agreement_scores(labels, site, graph, scores);
  const double scale = params.beta / static_cast<double>(params.k);
  return detail::site_term(scores, scores[static_cast<std::size_t>(labels[site])], scale, work);
}

/// Log pseudo-likelihood: the sum of site log-probabilities over every site.
inline double log_pseudo_likelihood(std::span<const Label> labels, const NeighbourGraph& graph,
                                    const InteractionParams& params, int class_count) {
  detail::check_params(params);
  detail::check_labels(labels, graph, class_count);
  std::vector<int> scores(static_cast<std::size_t>(class_count));
  std::vector<double> work(scores.size());
  const double scale = params.beta / static_cast<double>(params.k);
  double total = 0.0;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    agreement_scores(labels, i, graph, scores);
    total += detail::site_term(scores, scores[static_cast<std::size_t>(labels[i])], scale, work);
  }
  return total;
}

/// Sites whose pseudo-likelihood term depends on the label of `site`
/// (the site itself first, then everything that counts it as a neighbour).
inline std::vector<std::size_t> dependent_sites(const NeighbourGraph& graph, std::size_t site) {
  std::vector<std::size_t> out{site};
  if (graph.rule == NeighbourRule::Asymmetric) {
    for (std::size_t i = 0; i < graph.size(); ++i) {
      if (i == site) continue;
      const auto& ne = graph.neighbours[i];
      if (std::binary_search(ne.begin(), ne.end(), site)) out.push_back(i);
    }
  } else if (graph.rule == NeighbourRule::BoltzmannSymmetric) {
    // j counts `site` iff site in ne(j) (outgoing of j) or j in ne(site) (incoming of j)
    std::vector<std::size_t> both = graph.incoming[site];
    both.insert(both.end(), graph.neighbours[site].begin(), graph.neighbours[site].end());
    std::sort(both.begin(), both.end());
    both.erase(std::unique(both.begin(), both.end()), both.end());
    out.insert(out.end(), both.begin(), both.end());
  } else {
    out.insert(out.end(), graph.neighbours[site].begin(), graph.neighbours[site].end());
  }
  return out;
}

/// Class posterior of the label at `site` given every other label, at fixed
/// (beta, K): normalizes the joint pseudo-likelihood over the site's class.
/// Only the terms of dependent sites are evaluated; the rest cancel.
inline std::vector<double> site_class_posterior(std::span<const Label> labels, std::size_t site,
                                                const NeighbourGraph& graph,
                                                const InteractionParams& params,
                                                int class_count) {
  detail::check_params(params);
  detail::check_labels(labels, graph, class_count);
  const auto deps = dependent_sites(graph, site);
  std::vector<Label> z(labels.begin(), labels.end());
  std::vector<int> scores(static_cast<std::size_t>(class_count));
  std::vector<double> work(scores.size());
  std::vector<double> logp(static_cast<std::size_t>(class_count));
  const double scale = params.beta / static_cast<double>(params.k);
  for (int c = 0; c < class_count; ++c) {
    z[site] = c;
    double s = 0.0;
    for (std::size_t i : deps) {
      agreement_scores(z, i, graph, scores);
      s += detail::site_term(scores, scores[static_cast<std::size_t>(z[i])], scale, work);
    }
    logp[static_cast<std::size_t>(c)] = s;
  }
  softmax_in_place(logp);
  return logp;
}

/// p(z' = c | z, y, y', beta, K) for a test point: inserts `y_new` as site N
/// and normalizes the joint pseudo-likelihood of (z, z' = c) over c.
inline std::vector<double> conditional_class_posterior(const LabeledDataset& train,
                                                       std::span<const double> y_new,
                                                       const InteractionParams& params,
                                                       NeighbourRule rule) {
  detail::check_params(params);
  if (y_new.size() != train.dim()) throw InputError("test point dimension mismatch");
  if (params.k > train.size()) {
    throw InputError("k=" + std::to_string(params.k) + " exceeds training size " +
                     std::to_string(train.size()));
  }
  const auto graph = NeighbourIndex(train).with_point(y_new).graph(params.k, rule);
  std::vector<Label> z = train.labels();
  z.push_back(0);
  return site_class_posterior(z, train.size(), graph, params, train.class_count());
}

/// The log pseudo-likelihood of a fixed (graph, labels) pair compiled to a
/// function of beta alone. Sites with the same own-class count and the same
/// multiset of class counts contribute identical terms and are merged.
class ScoreTable {
 public:
  ScoreTable() = default;

  ScoreTable(std::span<const Label> labels, const NeighbourGraph& graph, int class_count)
      : class_count_(class_count), k_(graph.k) {
    detail::check_labels(labels, graph, class_count);
    const auto C = static_cast<std::size_t>(class_count);
    std::vector<std::vector<int>> keys;
    keys.reserve(graph.size());
    std::vector<int> scores(C);
    for (std::size_t i = 0; i < graph.size(); ++i) {
      agreement_scores(labels, i, graph, scores);
      std::vector<int> key;
      key.reserve(C + 1);
      key.push_back(scores[static_cast<std::size_t>(labels[i])]);
      std::vector<int> sorted = scores;
      std::sort(sorted.begin(), sorted.end());
      key.insert(key.end(), sorted.begin(), sorted.end());
      keys.push_back(std::move(key));
    }
    std::sort(keys.begin(), keys.end());
    for (std::size_t i = 0; i < keys.size();) {
      std::size_t j = i;
      while (j < keys.size() && keys[j] == keys[i]) ++j;
      own_.push_back(keys[i][0]);
      counts_.insert(counts_.end(), keys[i].begin() + 1, keys[i].end());
      multiplicity_.push_back(static_cast<double>(j - i));
      i = j;
    }
  }

  std::size_t groups() const { return own_.size(); }
  std::size_t k() const { return k_; }

  /// log pseudo-likelihood at interaction strength beta (order fixed by the graph).
  double operator()(double beta) const {
    const auto C = static_cast<std::size_t>(class_count_);
    const double scale = beta / static_cast<double>(k_);
    double total = 0.0;
    for (std::size_t g = 0; g < own_.size(); ++g) {
      const int* cnt = counts_.data() + g * C;
      // counts are sorted ascending, so the max term sits at one end
      const double m = scale * (scale >= 0.0 ? cnt[C - 1] : cnt[0]);
      double s = 0.0;
      for (std::size_t c = 0; c < C; ++c) s += std::exp(scale * cnt[c] - m);
      total += multiplicity_[g] * (scale * own_[g] - m - std::log(s));
    }
    return total;
  }

 private:
  int class_count_ = 1;
  std::size_t k_ = 1;
  std::vector<int> own_;
  std::vector<int> counts_;
  std::vector<double> multiplicity_;
};

}  // namespace pknn
