#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pknn/csv.hpp"
#include "pknn/cv.hpp"
#include "pknn/dataset.hpp"
#include "pknn/knn.hpp"
#include "pknn/korea.hpp"
#include "pknn/mcmc.hpp"
#include "pknn/metrics.hpp"

namespace pknn {

enum class Method { Knn, PknnFixed, KoreaAverage, KoreaOptimal, Mcmc };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::Knn: return "knn";
    case Method::PknnFixed: return "pknn-fixed";
    case Method::KoreaAverage: return "korea-average";
    case Method::KoreaOptimal: return "korea-optimal";
    case Method::Mcmc: return "mcmc";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  for (Method m : {Method::Knn, Method::PknnFixed, Method::KoreaAverage, Method::KoreaOptimal, Method::Mcmc}) {
    if (s == to_string(m)) return m;
  }
  throw InputError("unknown method '" + std::string(s) + "'");
}

/// Timer bucket of a method; both KOREA decision rules share one computation.
inline std::string_view timing_group(Method m) {
  return (m == Method::KoreaAverage || m == Method::KoreaOptimal) ? "korea" : to_string(m);
}

struct ExperimentConfig {
  std::string dataset_name = "dataset";
  std::vector<NeighbourRule> rules{NeighbourRule::Asymmetric};
  std::vector<Method> methods{Method::Knn, Method::PknnFixed, Method::KoreaAverage, Method::KoreaOptimal};
  /// 0 selects min(25, N_train - 1).
  std::size_t k_max = 0;
  double beta_max = 20.0;
  GammaPrior prior{};
  std::size_t folds = 4;
  std::size_t inner_folds = 4;
  std::uint64_t seed = 1;
  std::size_t mcmc_iterations = 10000;
  std::optional<std::size_t> mcmc_burn_in{};
  bool standardize = false;
  /// Keep at most this many evenly spaced feature columns (0 keeps all).
  std::size_t max_features = 0;
  FAverage f_average = FAverage::Macro;

  void validate() const {
    if (folds < 2) throw InputError("folds must be >= 2");
    if (inner_folds < 2) throw InputError("inner folds must be >= 2");
    if (rules.empty() || methods.empty()) throw InputError("need at least one rule and one method");
    if (!(beta_max > 0.0)) throw InputError("beta_max must be positive");
    prior.validate();
    if (mcmc_iterations < 1) throw InputError("mcmc iterations must be positive");
  }

  KoreaConfig korea(NeighbourRule rule) const {
    KoreaConfig c;
    c.k_max = k_max;
    c.rule = rule;
    c.prior = prior;
    c.beta_max = beta_max;
    return c;
  }

  McmcConfig mcmc() const {
    McmcConfig c;
    c.iterations = mcmc_iterations;
    c.burn_in = mcmc_burn_in;
    c.seed = seed;
    c.prior = prior;
    c.beta_max = beta_max;
    return c;
  }
};

/// Evenly spaced column subset used when a dataset is too wide.
inline std::vector<std::size_t> feature_subset(std::size_t dim, std::size_t max_features) {
  std::vector<std::size_t> cols;
  if (max_features == 0 || max_features >= dim) {
    for (std::size_t j = 0; j < dim; ++j) cols.push_back(j);
    return cols;
  }
  for (std::size_t i = 0; i < max_features; ++i) cols.push_back(i * dim / max_features);
  return cols;
}

/// Mode of p(beta | z, y, K) on the training labels alone.
inline LaplaceFit fit_training_beta(const NeighbourIndex& index, std::span<const Label> labels,
                                    int class_count, std::size_t k, NeighbourRule rule,
                                    const KoreaConfig& config) {
  const ScoreTable table(labels, index.graph(k, rule), class_count);
  auto target = [&](double beta) { return table(beta) + config.prior.log_pdf(beta); };
  LaplaceFit fit = laplace_fit(target, config.beta_max, config.laplace);
  fit.k = k;
  return fit;
}

/// PKNN at fixed (beta, K): argmax of the test label's conditional posterior.
inline Label pknn_fixed_classify(const NeighbourIndex& train_index, std::span<const Label> labels,
                                 int class_count, std::span<const double> y, std::size_t k,
                                 double beta, NeighbourRule rule) {
  const auto graph = train_index.with_point(y).graph(k, rule);
  std::vector<Label> z(labels.begin(), labels.end());
  z.push_back(0);
  const auto p = site_class_posterior(z, labels.size(), graph, {beta, k}, class_count);
  return PredictiveResult::argmax(p);
}

namespace detail {

/// Inner-CV accuracy-maximizing k (lowest k on ties). `score_split` returns
/// the count of correct validation predictions for each k in 1..k_hi.
template <class ScoreSplit>
std::size_t select_k(const LabeledDataset& train, std::size_t inner_folds, std::uint64_t seed,
                     std::size_t k_hi, ScoreSplit&& score_split) {
  const std::size_t folds = std::min(inner_folds, train.size());
  const auto splits = kfold_split(train.size(), folds, seed);
  for (const auto& s : splits) k_hi = std::min(k_hi, s.train.size() - 1);
  k_hi = std::max<std::size_t>(k_hi, 1);
  std::vector<std::size_t> correct(k_hi, 0);
  for (const auto& s : splits) {
    const auto inner_train = train.subset(s.train);
    const auto c = score_split(inner_train, train.subset(s.test), k_hi);
    for (std::size_t k = 0; k < k_hi; ++k) correct[k] += c[k];
  }
  return 1 + static_cast<std::size_t>(std::max_element(correct.begin(), correct.end()) - correct.begin());
}

}  // namespace detail

/// kNN order chosen by inner cross-validation on the training part.
inline std::size_t select_knn_k(const LabeledDataset& train, NeighbourRule rule, std::size_t k_hi,
                                std::size_t inner_folds, std::uint64_t seed) {
  return detail::select_k(train, inner_folds, seed, k_hi,
                          [&](const LabeledDataset& tr, const LabeledDataset& va, std::size_t kh) {
                            std::vector<std::size_t> c(kh, 0);
                            const NeighbourIndex index(tr);
                            for (std::size_t i = 0; i < va.size(); ++i) {
                              KnnVoter voter(index, tr.labels(), tr.class_count(), va.point(i));
                              for (std::size_t k = 1; k <= kh; ++k) c[k - 1] += voter.vote(k, rule) == va.label(i);
                            }
                            return c;
                          });
}

/// PKNN order chosen by inner cross-validation, each order using its
/// training-only beta mode.
inline std::size_t select_pknn_k(const LabeledDataset& train, const KoreaConfig& config,
                                 std::size_t k_hi, std::size_t inner_folds, std::uint64_t seed) {
  return detail::select_k(train, inner_folds, seed, k_hi,
                          [&](const LabeledDataset& tr, const LabeledDataset& va, std::size_t kh) {
                            std::vector<std::size_t> c(kh, 0);
                            const NeighbourIndex index(tr);
                            std::vector<double> beta(kh);
                            for (std::size_t k = 1; k <= kh; ++k) {
                              beta[k - 1] = fit_training_beta(index, tr.labels(), tr.class_count(), k,
                                                              config.rule, config).mode;
                            }
                            std::vector<Label> z = tr.labels();
                            z.push_back(0);
                            for (std::size_t i = 0; i < va.size(); ++i) {
                              const auto inserted = index.with_point(va.point(i));
                              for (std::size_t k = 1; k <= kh; ++k) {
                                const auto p = site_class_posterior(z, tr.size(), inserted.graph(k, config.rule),
                                                                    {beta[k - 1], k}, tr.class_count());
                                c[k - 1] += PredictiveResult::argmax(p) == va.label(i);
                              }
                            }
                            return c;
                          });
}

struct FoldRecord {
  Method method;
  NeighbourRule rule;
  std::size_t fold;
  double f_measure;
  /// Order chosen by inner validation (knn, pknn-fixed); 0 otherwise.
  std::size_t chosen_k = 0;
};

struct SummaryRow {
  Method method;
  NeighbourRule rule;
  double mean;
  double stddev;
};

struct BenchmarkReport {
  std::string dataset;
  std::size_t n = 0, dim = 0;
  int class_count = 0;
  std::vector<FoldRecord> records;
  std::vector<SummaryRow> summary;
  /// Mean wall-clock seconds per fold and rule, by timing group.
  std::map<std::string, double> seconds;
};

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Sample standard deviation (n - 1 denominator); 0 for a single value.
inline double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

/// Cross-validated F-measures of every (method, rule) pair.
///
/// knn and pknn-fixed pick K by inner cross-validation on each training
/// part; the KOREA rules and mcmc average over K instead. Both KOREA rules
/// come from the same per-point predictive results.
inline BenchmarkReport run_benchmark(const LabeledDataset& full_data, const ExperimentConfig& config) {
  config.validate();
  const auto cols = feature_subset(full_data.dim(), config.max_features);
  const LabeledDataset data = full_data.select_features(cols);
  const auto folds = kfold_split(data.size(), config.folds, config.seed);

  BenchmarkReport report;
  report.dataset = config.dataset_name;
  report.n = data.size();
  report.dim = data.dim();
  report.class_count = data.class_count();

  auto wants = [&](Method m) {
    return std::find(config.methods.begin(), config.methods.end(), m) != config.methods.end();
  };
  using clock = std::chrono::steady_clock;
  std::map<std::string, double> total_seconds;
  const int C = data.class_count();

  for (std::size_t f = 0; f < folds.size(); ++f) {
    LabeledDataset train = data.subset(folds[f].train);
    LabeledDataset test = data.subset(folds[f].test);
    if (config.standardize) {
      const Standardizer s(train.points());
      train = s.apply(train);
      test = s.apply(test);
    }
    const std::size_t k_hi = config.k_max ? config.k_max : default_k_max(train.size());
    const std::uint64_t inner_seed = Rng::splitmix64(config.seed + 0x100 + f);

    for (std::size_t r = 0; r < config.rules.size(); ++r) {
      const NeighbourRule rule = config.rules[r];
      const KoreaConfig kc = config.korea(rule);
      auto record = [&](Method m, const std::vector<Label>& pred, std::size_t chosen) {
        report.records.push_back(
            {m, rule, f, f_measure(pred, test.labels(), C, config.f_average), chosen});
      };

      if (wants(Method::Knn)) {
        const auto t0 = clock::now();
        const std::size_t k = select_knn_k(train, rule, std::min(k_hi, train.size()), config.inner_folds, inner_seed);
        const NeighbourIndex index(train);
        std::vector<Label> pred;
        for (std::size_t i = 0; i < test.size(); ++i) {
          pred.push_back(KnnVoter(index, train.labels(), C, test.point(i)).vote(k, rule));
        }
        total_seconds["knn"] += std::chrono::duration<double>(clock::now() - t0).count();
        record(Method::Knn, pred, k);
      }

      if (wants(Method::PknnFixed)) {
        const auto t0 = clock::now();
        const std::size_t k = select_pknn_k(train, kc, k_hi, config.inner_folds, inner_seed);
        const NeighbourIndex index(train);
        const double beta = fit_training_beta(index, train.labels(), C, k, rule, kc).mode;
        std::vector<Label> pred;
        for (std::size_t i = 0; i < test.size(); ++i) {
          pred.push_back(pknn_fixed_classify(index, train.labels(), C, test.point(i), k, beta, rule));
        }
        total_seconds["pknn-fixed"] += std::chrono::duration<double>(clock::now() - t0).count();
        record(Method::PknnFixed, pred, k);
      }

      if (wants(Method::KoreaAverage) || wants(Method::KoreaOptimal)) {
        const auto t0 = clock::now();
        const std::size_t k_max = resolve_k_max(kc, train.size());
        const NeighbourIndex index(train);
        std::vector<Label> avg, opt;
        for (std::size_t i = 0; i < test.size(); ++i) {
          const PknnJointModel model(index, train.labels(), C, test.point(i), rule, k_max);
          const auto res = classify(model, kc);
          avg.push_back(res.predicted());
          opt.push_back(res.predicted_optimal());
        }
        total_seconds["korea"] += std::chrono::duration<double>(clock::now() - t0).count();
        if (wants(Method::KoreaAverage)) record(Method::KoreaAverage, avg, 0);
        if (wants(Method::KoreaOptimal)) record(Method::KoreaOptimal, opt, 0);
      }

      if (wants(Method::Mcmc)) {
        const auto t0 = clock::now();
        const std::size_t k_max = resolve_k_max(kc, train.size());
        const NeighbourIndex index(train);
        const McmcConfig mc = config.mcmc();
        std::vector<Label> pred;
        for (std::size_t i = 0; i < test.size(); ++i) {
          const PknnJointModel model(index, train.labels(), C, test.point(i), rule, k_max);
          const std::uint64_t stream = r * data.size() + folds[f].test[i];
          const auto trace = run_chain(model, mc, stream);
          pred.push_back(PredictiveResult::argmax(trace.class_histogram(C)));
        }
        total_seconds["mcmc"] += std::chrono::duration<double>(clock::now() - t0).count();
        record(Method::Mcmc, pred, 0);
      }
    }
  }

  for (Method m : config.methods) {
    for (NeighbourRule rule : config.rules) {
      std::vector<double> fs;
      for (const auto& rec : report.records) {
        if (rec.method == m && rec.rule == rule) fs.push_back(rec.f_measure);
      }
      if (!fs.empty()) report.summary.push_back({m, rule, mean_of(fs), stddev_of(fs)});
    }
  }
  const double runs = static_cast<double>(folds.size() * config.rules.size());
  for (const auto& [k, v] : total_seconds) report.seconds[k] = v / runs;
  return report;
}

/// Machine-readable report: one record per fold x method x rule plus the
/// summary. Timings are left out so identical runs give identical bytes.
inline nlohmann::json report_to_json(const BenchmarkReport& r, const ExperimentConfig& config) {
  nlohmann::json j;
  j["dataset"] = r.dataset;
  j["n"] = r.n;
  j["dim"] = r.dim;
  j["classes"] = r.class_count;
  j["config"] = {{"folds", config.folds},
                 {"inner_folds", config.inner_folds},
                 {"seed", config.seed},
                 {"k_max", config.k_max},
                 {"beta_max", config.beta_max},
                 {"prior_shape", config.prior.shape},
                 {"prior_scale", config.prior.scale},
                 {"mcmc_iterations", config.mcmc_iterations},
                 {"standardize", config.standardize},
                 {"max_features", config.max_features},
                 {"f_average", config.f_average == FAverage::Macro ? "macro" : "micro"}};
  j["records"] = nlohmann::json::array();
  for (const auto& rec : r.records) {
    j["records"].push_back({{"method", to_string(rec.method)},
                            {"rule", to_string(rec.rule)},
                            {"fold", rec.fold},
                            {"f_measure", rec.f_measure},
                            {"chosen_k", rec.chosen_k}});
  }
  j["summary"] = nlohmann::json::array();
  for (const auto& s : r.summary) {
    j["summary"].push_back(
        {{"method", to_string(s.method)}, {"rule", to_string(s.rule)}, {"mean", s.mean}, {"std", s.stddev}});
  }
  return j;
}

inline nlohmann::json timings_to_json(const BenchmarkReport& r) {
  nlohmann::json j;
  j["dataset"] = r.dataset;
  j["seconds_per_fold"] = r.seconds;
  return j;
}

/// Human-readable F-measure table (mean +- std over folds).
inline void print_report_table(const BenchmarkReport& r, std::ostream& os) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s: N=%zu d=%zu C=%d\n", r.dataset.c_str(), r.n, r.dim, r.class_count);
  os << buf;
  std::snprintf(buf, sizeof buf, "%-14s %-11s %s\n", "method", "rule", "F-measure");
  os << buf;
  for (const auto& s : r.summary) {
    std::snprintf(buf, sizeof buf, "%-14s %-11s %.4f +- %.4f\n", std::string(to_string(s.method)).c_str(),
                  std::string(to_string(s.rule)).c_str(), s.mean, s.stddev);
    os << buf;
  }
}

}  // namespace pknn
