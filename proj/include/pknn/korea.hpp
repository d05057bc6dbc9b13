#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pknn/dataset.hpp"
#include "pknn/error.hpp"
#include "pknn/laplace.hpp"
#include "pknn/likelihood.hpp"
#include "pknn/neighbours.hpp"

namespace pknn {

/// Anything that yields log p(z' = c, z | beta, K = k) for every class c.
template <class M>
concept JointModel = requires(const M& m, std::size_t k, double beta, std::span<double> out) {
  { m.class_count() } -> std::convertible_to<int>;
  { m.max_order() } -> std::convertible_to<std::size_t>;
  m.log_joint(k, beta, out);
};

/// Joint pseudo-likelihood of the training labels plus one test label, for a
/// test point inserted into the training set. Score tables for every
/// (K, test class) pair are compiled up front, so each evaluation costs
/// O(distinct site signatures x C).
class PknnJointModel {
 public:
  PknnJointModel(const NeighbourIndex& train_index, std::span<const Label> train_labels,
                 int class_count, std::span<const double> y_new, NeighbourRule rule,
                 std::size_t k_max)
      : class_count_(class_count), k_max_(k_max) {
    const std::size_t n = train_labels.size();
    if (k_max < 1 || k_max > n) {
      throw InputError("k_max=" + std::to_string(k_max) + " outside [1, " + std::to_string(n) + "]");
    }
    const auto index = train_index.with_point(y_new);
    std::vector<Label> z(train_labels.begin(), train_labels.end());
    z.push_back(0);
    tables_.reserve(k_max * static_cast<std::size_t>(class_count));
    for (std::size_t k = 1; k <= k_max; ++k) {
      const auto graph = index.graph(k, rule);
      for (int c = 0; c < class_count; ++c) {
        z[n] = c;
        tables_.emplace_back(z, graph, class_count);
      }
    }
  }

  PknnJointModel(const LabeledDataset& train, std::span<const double> y_new, NeighbourRule rule,
                 std::size_t k_max)
      : PknnJointModel(NeighbourIndex(train), train.labels(), train.class_count(), y_new, rule,
                       k_max) {}

  int class_count() const { return class_count_; }
  std::size_t max_order() const { return k_max_; }

  void log_joint(std::size_t k, double beta, std::span<double> out) const {
    const auto C = static_cast<std::size_t>(class_count_);
    const ScoreTable* t = tables_.data() + (k - 1) * C;
    for (std::size_t c = 0; c < C; ++c) out[c] = t[c](beta);
  }

 private:
  int class_count_;
  std::size_t k_max_;
  std::vector<ScoreTable> tables_;
};

/// log sum_c p(z' = c, z | beta, K): the test label marginalized out.
template <JointModel M>
double log_evidence(const M& model, std::size_t k, double beta) {
  std::vector<double> lj(static_cast<std::size_t>(model.class_count()));
  model.log_joint(k, beta, lj);
  return log_sum_exp(lj);
}

struct KoreaConfig {
  /// 0 selects min(25, N - 1).
  std::size_t k_max = 0;
  NeighbourRule rule = NeighbourRule::Asymmetric;
  GammaPrior prior{};
  double beta_max = 20.0;
  /// Normalize the Gaussian approximations over (0, beta_max] instead of the real line.
  bool truncated_gaussian = true;
  LaplaceOptions laplace{};
  /// Replaces the mu +- i sigma grid when set.
  std::optional<std::vector<double>> grid_override{};

  void validate() const {
    prior.validate();
    if (!(beta_max > laplace.lower)) throw InputError("beta_max must be positive");
  }
};

inline std::size_t default_k_max(std::size_t n_train) {
  return std::max<std::size_t>(1, std::min<std::size_t>(25, n_train > 0 ? n_train - 1 : 0));
}

/// Normalized order weights alpha~ over K = 1..k_max with their Laplace fits.
struct OrderPosterior {
  std::vector<double> weights;
  std::vector<double> log_alpha;
  std::vector<LaplaceFit> fits;
  std::size_t k_max = 0;
  std::size_t k_star = 1;

  const LaplaceFit& fit(std::size_t k) const { return fits.at(k - 1); }
  double weight(std::size_t k) const { return weights.at(k - 1); }
};

/// Normalizes unnormalized log order weights in log space and picks the
/// argmax order (lowest K on exact ties).
inline OrderPosterior make_order_posterior(std::vector<double> log_alpha,
                                           std::vector<LaplaceFit> fits) {
  if (log_alpha.empty()) throw InputError("order posterior needs at least one order");
  OrderPosterior op;
  op.k_max = log_alpha.size();
  op.weights = log_alpha;
  softmax_in_place(op.weights);
  if (!std::isfinite(log_sum_exp(log_alpha))) {
    throw NumericalError("every order has zero unnormalized posterior mass");
  }
  op.k_star = 1 + static_cast<std::size_t>(
                      std::max_element(log_alpha.begin(), log_alpha.end()) - log_alpha.begin());
  op.log_alpha = std::move(log_alpha);
  op.fits = std::move(fits);
  return op;
}

/// Log density of the per-order Gaussian approximation of p(beta | Y, K).
inline double log_beta_density(const LaplaceFit& fit, double beta, const KoreaConfig& config) {
  return config.truncated_gaussian
             ? log_truncated_normal_pdf(beta, fit.mode, fit.variance, config.beta_max)
             : log_normal_pdf(beta, fit.mode, fit.variance);
}

/// Laplace fit of p(beta | Y, K = k) proportional to
/// sum_c p(z' = c, z | beta, k) p(beta) on (0, beta_max].
template <JointModel M>
LaplaceFit laplace_beta_posterior(const M& model, std::size_t k, const KoreaConfig& config) {
  auto target = [&](double beta) { return log_evidence(model, k, beta) + config.prior.log_pdf(beta); };
  LaplaceFit fit = laplace_fit(target, config.beta_max, config.laplace);
  fit.k = k;
  return fit;
}

inline LaplaceFit laplace_beta_posterior(const LabeledDataset& train, std::span<const double> y_new,
                                         std::size_t k, NeighbourRule rule, const GammaPrior& prior,
                                         double beta_max) {
  KoreaConfig config;
  config.rule = rule;
  config.prior = prior;
  config.beta_max = beta_max;
  config.validate();
  PknnJointModel model(train, y_new, rule, k);
  return laplace_beta_posterior(model, k, config);
}

/// Approximate p(K | Y) for K = 1..model.max_order(): the joint density over
/// the Gaussian approximation of p(beta | Y, K), both taken at the beta mode,
/// with a uniform prior on K.
template <JointModel M>
OrderPosterior order_posterior(const M& model, const KoreaConfig& config) {
  config.validate();
  const std::size_t k_max = model.max_order();
  if (k_max < 1) throw InputError("k_max must be at least 1");
  const double log_p_k = -std::log(static_cast<double>(k_max));
  std::vector<double> log_alpha;
  std::vector<LaplaceFit> fits;
  for (std::size_t j = 1; j <= k_max; ++j) {
    LaplaceFit fit = laplace_beta_posterior(model, j, config);
    log_alpha.push_back(fit.log_target_at_mode + log_p_k - log_beta_density(fit, fit.mode, config));
    fits.push_back(fit);
  }
  return make_order_posterior(std::move(log_alpha), std::move(fits));
}

inline OrderPosterior order_posterior(const LabeledDataset& train, std::span<const double> y_new,
                                      const KoreaConfig& config) {
  const std::size_t k_max = config.k_max ? config.k_max : default_k_max(train.size());
  if (k_max + 1 > train.size()) {
    throw InputError("k_max=" + std::to_string(k_max) + " exceeds N-1=" +
                     std::to_string(train.size() - 1));
  }
  return order_posterior(PknnJointModel(train, y_new, config.rule, k_max), config);
}

struct BetaMoments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Mean and variance of the alpha~-weighted mixture of per-order Gaussians.
inline BetaMoments beta_marginal_moments(const OrderPosterior& op) {
  BetaMoments m;
  for (std::size_t j = 0; j < op.k_max; ++j) m.mean += op.weights[j] * op.fits[j].mode;
  for (std::size_t j = 0; j < op.k_max; ++j) {
    const double d = m.mean - op.fits[j].mode;
    m.variance += op.weights[j] * (op.fits[j].variance + d * d);
  }
  return m;
}

struct BetaGrid {
  std::vector<double> points;
  double spacing = 0.0;
};

/// Steps taken on each side of the centre at most.
inline constexpr int kMaxGridSteps = 64;
inline constexpr double kGridFloor = 1e-6;

/// Points mu + i sigma (i integer) inside (0, beta_max], ascending. A grid
/// that would be empty collapses to the single point clamp(mu, 1e-6, beta_max).
inline BetaGrid build_beta_grid(double mu, double sigma, double beta_max) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InputError("grid spacing must be positive");
  BetaGrid g;
  g.spacing = sigma;
  for (int i = -kMaxGridSteps; i <= kMaxGridSteps; ++i) {
    const double b = mu + i * sigma;
    if (b > 0.0 && b <= beta_max) g.points.push_back(b);
  }
  if (g.points.empty()) g.points.push_back(std::max(kGridFloor, std::min(mu, beta_max)));
  return g;
}

/// Model-averaged class posterior of one test point and its diagnostics.
struct PredictiveResult {
  std::vector<double> class_probs;
  /// Class posterior at (K*, beta mode of K*) only.
  std::vector<double> optimal_probs;
  OrderPosterior order;
  BetaMoments beta_moments;
  BetaGrid grid;
  /// lambda~ over (grid point m, order j), row-major: m * k_max + (j - 1).
  std::vector<double> mixture_weights;
  double label_mean = 0.0;
  double label_variance = 0.0;

  double mixture_weight(std::size_t m, std::size_t k) const {
    return mixture_weights.at(m * order.k_max + (k - 1));
  }
  Label predicted() const { return argmax(class_probs); }
  Label predicted_optimal() const { return argmax(optimal_probs); }

  static Label argmax(const std::vector<double>& p) {
    return static_cast<Label>(std::max_element(p.begin(), p.end()) - p.begin());
  }
};

namespace detail {

inline void renormalize(std::vector<double>& p, const char* what) {
  double s = 0.0;
  for (double v : p) s += v;
  if (!(std::abs(s - 1.0) <= 1e-9)) {
    throw NumericalError(std::string(what) + " drifted from 1 (sum " + std::to_string(s) + ")");
  }
  for (double& v : p) v /= s;
}

}  // namespace detail

/// KOREA prediction for one test point: order posterior, beta-marginal
/// moments, the mu +- i sigma grid, mixture weights over (beta, K), and the
/// mixture of per-cell class posteriors.
template <JointModel M>
PredictiveResult classify(const M& model, const KoreaConfig& config) {
  PredictiveResult r;
  r.order = order_posterior(model, config);
  r.beta_moments = beta_marginal_moments(r.order);
  if (config.grid_override) {
    r.grid.points = *config.grid_override;
    if (r.grid.points.empty()) throw InputError("grid override is empty");
  } else {
    r.grid = build_beta_grid(r.beta_moments.mean, std::sqrt(r.beta_moments.variance), config.beta_max);
  }
  const auto C = static_cast<std::size_t>(model.class_count());
  const std::size_t k_max = r.order.k_max;
  const std::size_t cells = r.grid.points.size() * k_max;

  std::vector<double> log_lambda(cells);
  for (std::size_t m = 0; m < r.grid.points.size(); ++m) {
    for (std::size_t j = 1; j <= k_max; ++j) {
      log_lambda[m * k_max + j - 1] =
          log_beta_density(r.order.fit(j), r.grid.points[m], config) + std::log(r.order.weight(j));
    }
  }
  if (!std::isfinite(log_sum_exp(log_lambda))) throw NumericalError("mixture weights vanish on the grid");
  r.mixture_weights = log_lambda;
  softmax_in_place(r.mixture_weights);

  r.class_probs.assign(C, 0.0);
  std::vector<double> tau(C);
  double mean = 0.0;
  std::vector<double> cell_mean(cells), cell_var(cells);
  for (std::size_t m = 0; m < r.grid.points.size(); ++m) {
    for (std::size_t j = 1; j <= k_max; ++j) {
      const std::size_t cell = m * k_max + j - 1;
      model.log_joint(j, r.grid.points[m], tau);
      softmax_in_place(tau);
      const double w = r.mixture_weights[cell];
      double mu = 0.0, second = 0.0;
      for (std::size_t c = 0; c < C; ++c) {
        r.class_probs[c] += w * tau[c];
        mu += static_cast<double>(c) * tau[c];
        second += static_cast<double>(c * c) * tau[c];
      }
      cell_mean[cell] = mu;
      cell_var[cell] = std::max(0.0, second - mu * mu);
      mean += w * mu;
    }
  }
  double var = 0.0;
  for (std::size_t cell = 0; cell < cells; ++cell) {
    const double d = mean - cell_mean[cell];
    var += r.mixture_weights[cell] * (cell_var[cell] + d * d);
  }
  r.label_mean = mean;
  r.label_variance = var;
  detail::renormalize(r.class_probs, "class probabilities");

  r.optimal_probs.assign(C, 0.0);
  model.log_joint(r.order.k_star, r.order.fit(r.order.k_star).mode, r.optimal_probs);
  softmax_in_place(r.optimal_probs);
  return r;
}

inline std::size_t resolve_k_max(const KoreaConfig& config, std::size_t n_train) {
  const std::size_t k_max = config.k_max ? config.k_max : default_k_max(n_train);
  if (k_max < 1 || k_max + 1 > n_train) {
    throw InputError("k_max=" + std::to_string(k_max) + " outside [1, N-1] for N=" +
                     std::to_string(n_train));
  }
  return k_max;
}

inline PredictiveResult classify(const LabeledDataset& train, std::span<const double> y_new,
                                 const KoreaConfig& config) {
  const std::size_t k_max = resolve_k_max(config, train.size());
  return classify(PknnJointModel(train, y_new, config.rule, k_max), config);
}

/// One batch item: a result, or the message of the error that stopped it.
struct BatchOutcome {
  std::optional<PredictiveResult> result;
  std::string error;
};

/// Classifies each test point independently (the test labels factorize).
/// A failing item records its error and the batch continues.
inline std::vector<BatchOutcome> classify_batch(const LabeledDataset& train,
                                                std::span<const FeatureVector> tests,
                                                const KoreaConfig& config) {
  std::vector<BatchOutcome> out(tests.size());
  if (tests.empty()) return out;
  const std::size_t k_max = resolve_k_max(config, train.size());
  const NeighbourIndex index(train);
  for (std::size_t i = 0; i < tests.size(); ++i) {
    try {
      if (tests[i].size() != train.dim()) throw InputError("test point dimension mismatch");
      PknnJointModel model(index, train.labels(), train.class_count(), tests[i], config.rule, k_max);
      out[i].result = classify(model, config);
    } catch (const std::exception& e) {
      out[i].error = e.what();
    }
  }
  return out;
}

}  // namespace pknn
