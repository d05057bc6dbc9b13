// Command-line front end: classify, benchmark, posterior, compare.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "pknn/pknn.hpp"

namespace {

enum ExitCode { kOk = 0, kInputError = 1, kNumericalError = 2, kIoError = 3 };

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct CommonOptions {
  std::string data;
  std::string label_column;
  bool no_header = false;
  std::size_t k_max = 0;
  double beta_max = 20.0;
  double prior_shape = 2.0;
  double prior_scale = 10.0;
  bool standardize = false;
  bool literal_gaussian = false;

  void add(CLI::App* app) {
    app->add_option("--data", data, "Dataset CSV")->required();
    app->add_option("--label-column", label_column, "Label column name or 0-based index (default: last)");
    app->add_flag("--no-header", no_header, "CSV has no header row");
    app->add_option("--k-max", k_max, "Largest K considered (default min(25, N-1))");
    app->add_option("--beta-max", beta_max, "Upper bound of beta");
    app->add_option("--prior-shape", prior_shape, "Gamma prior shape");
    app->add_option("--prior-scale", prior_scale, "Gamma prior scale");
    app->add_flag("--standardize", standardize, "z-score features with training statistics");
    app->add_flag("--untruncated-gaussian", literal_gaussian,
                  "Normalize beta approximations over the real line instead of (0, beta-max]");
  }

  pknn::CsvOptions csv() const {
    pknn::CsvOptions o;
    o.has_header = !no_header;
    o.label_column = label_column;
    return o;
  }

  pknn::KoreaConfig korea(pknn::NeighbourRule rule) const {
    pknn::KoreaConfig c;
    c.k_max = k_max;
    c.rule = rule;
    c.prior = {prior_shape, prior_scale};
    c.beta_max = beta_max;
    c.truncated_gaussian = !literal_gaussian;
    return c;
  }
};

std::string full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int run_classify(const CommonOptions& opt, const std::string& test_path, const std::string& method_name,
                 const std::string& rule_name, std::size_t knn_k, std::size_t iterations, std::uint64_t seed) {
  using namespace pknn;
  LabeledDataset train = load_csv(opt.data, opt.csv());
  const Method method = parse_method(method_name);
  const NeighbourRule rule = parse_rule(rule_name);

  // The test file either has only feature columns or the same layout as the training file.
  std::vector<FeatureVector> tests;
  std::vector<Label> truth;
  try {
    tests = load_feature_csv(test_path, !opt.no_header);
  } catch (const InputError&) {
    CsvOptions o = opt.csv();
    const LabeledDataset t = load_csv(test_path, o);
    tests = t.points();
    for (std::size_t i = 0; i < t.size(); ++i) {
      const auto& name = t.class_names()[static_cast<std::size_t>(t.label(i))];
      const auto& names = train.class_names();
      const auto it = std::find(names.begin(), names.end(), name);
      truth.push_back(it == names.end() ? -1 : static_cast<Label>(it - names.begin()));
    }
  }
  if (opt.standardize) {
    const Standardizer s(train.points());
    train = s.apply(train);
    for (auto& y : tests) y = s.apply(y);
  }
  for (const auto& y : tests) {
    if (y.size() != train.dim()) throw InputError("test file has " + std::to_string(y.size()) +
                                                  " features, training file has " + std::to_string(train.dim()));
  }

  const int C = train.class_count();
  const KoreaConfig kc = opt.korea(rule);
  const NeighbourIndex index(train);
  std::vector<Label> predicted;
  std::cout << "index,predicted";
  for (const auto& n : train.class_names()) std::cout << ",p_" << n;
  std::cout << '\n';

  auto emit = [&](std::size_t i, Label z, const std::vector<double>& probs) {
    predicted.push_back(z);
    std::cout << i << ',' << train.class_names()[static_cast<std::size_t>(z)];
    for (double p : probs) std::cout << ',' << full(p);
    std::cout << '\n';
  };

  if (method == Method::Knn || method == Method::PknnFixed) {
    const std::size_t k_hi = opt.k_max ? opt.k_max : default_k_max(train.size());
    std::size_t k = knn_k;
    if (method == Method::Knn) {
      if (k == 0) k = select_knn_k(train, rule, k_hi, 4, seed);
      for (std::size_t i = 0; i < tests.size(); ++i) {
        const auto s = KnnVoter(index, train.labels(), C, tests[i]).scores(k, rule);
        double total = 0.0;
        for (int v : s) total += v;
        std::vector<double> probs;
        for (int v : s) probs.push_back(v / total);
        emit(i, static_cast<Label>(std::max_element(s.begin(), s.end()) - s.begin()), probs);
      }
    } else {
      if (k == 0) k = select_pknn_k(train, kc, k_hi, 4, seed);
      const double beta = fit_training_beta(index, train.labels(), C, k, rule, kc).mode;
      std::vector<Label> z = train.labels();
      z.push_back(0);
      for (std::size_t i = 0; i < tests.size(); ++i) {
        const auto p = site_class_posterior(z, train.size(), index.with_point(tests[i]).graph(k, rule), {beta, k}, C);
        emit(i, PredictiveResult::argmax(p), p);
      }
    }
    std::cerr << "selected k=" << k << '\n';
  } else {
    const std::size_t k_max = resolve_k_max(kc, train.size());
    McmcConfig mc;
    mc.iterations = iterations;
    mc.seed = seed;
    mc.prior = kc.prior;
    mc.beta_max = kc.beta_max;
    for (std::size_t i = 0; i < tests.size(); ++i) {
      const PknnJointModel model(index, train.labels(), C, tests[i], rule, k_max);
      if (method == Method::Mcmc) {
        const auto h = run_chain(model, mc, i).class_histogram(C);
        emit(i, PredictiveResult::argmax(h), h);
      } else {
        const auto r = classify(model, kc);
        for (const auto& f : r.order.fits) {
          if (f.curvature_fallback) {
            std::cerr << "warning: test " << i << " K=" << f.k << ": curvature fallback used\n";
          }
        }
        if (method == Method::KoreaAverage) emit(i, r.predicted(), r.class_probs);
        else emit(i, r.predicted_optimal(), r.optimal_probs);
      }
    }
  }
  if (!truth.empty() && std::find(truth.begin(), truth.end(), -1) == truth.end()) {
    std::cerr << "F-measure (macro): " << f_measure(predicted, truth, C) << '\n';
  }
  return kOk;
}

int run_benchmark_cmd(const CommonOptions& opt, const std::string& name, std::size_t folds, std::uint64_t seed,
                      const std::string& methods, const std::string& rules, std::size_t iterations,
                      std::size_t max_features, const std::string& out, const std::string& timings_out,
                      bool micro) {
  using namespace pknn;
  const LabeledDataset data = load_csv(opt.data, opt.csv());
  ExperimentConfig cfg;
  cfg.dataset_name = name.empty() ? std::filesystem::path(opt.data).stem().string() : name;
  cfg.folds = folds;
  cfg.seed = seed;
  cfg.k_max = opt.k_max;
  cfg.beta_max = opt.beta_max;
  cfg.prior = {opt.prior_shape, opt.prior_scale};
  cfg.standardize = opt.standardize;
  cfg.mcmc_iterations = iterations;
  cfg.max_features = max_features;
  cfg.f_average = micro ? FAverage::Micro : FAverage::Macro;
  cfg.methods.clear();
  for (const auto& m : split_list(methods)) cfg.methods.push_back(parse_method(m));
  cfg.rules.clear();
  for (const auto& r : split_list(rules)) cfg.rules.push_back(parse_rule(r));

  const auto report = run_benchmark(data, cfg);
  print_report_table(report, std::cout);
  std::cout << "mean seconds per fold:";
  for (const auto& [group, s] : report.seconds) std::cout << ' ' << group << '=' << s;
  std::cout << '\n';
  if (!out.empty()) {
    std::ofstream os(out);
    if (!os) throw IoError("cannot write " + out);
    os << report_to_json(report, cfg).dump(2) << '\n';
  }
  if (!timings_out.empty()) {
    std::ofstream os(timings_out);
    if (!os) throw IoError("cannot write " + timings_out);
    os << timings_to_json(report).dump(2) << '\n';
  }
  return kOk;
}

int run_posterior(const CommonOptions& opt, std::size_t test_index, const std::string& method,
                  const std::string& rule, const std::string& out_dir, std::size_t iterations, std::uint64_t seed) {
  using namespace pknn;
  const LabeledDataset data = load_csv(opt.data, opt.csv());
  PosteriorRequest req;
  req.test_index = test_index;
  req.korea = opt.korea(parse_rule(rule));
  req.standardize = opt.standardize;
  if (method == "mcmc") {
    req.use_mcmc = true;
  } else if (method != "korea") {
    throw InputError("posterior method must be korea or mcmc");
  }
  req.mcmc.iterations = iterations;
  req.mcmc.seed = seed;
  req.mcmc.prior = req.korea.prior;
  req.mcmc.beta_max = req.korea.beta_max;
  const auto out = dump_posterior(data, req, out_dir);
  std::cout << "wrote " << out_dir << " (k_max=" << out.dump.k_posterior.rows
            << ", grid=" << out.dump.beta_axis.size() << ")\n";
  return kOk;
}

int run_compare(const std::string& korea_dir, const std::string& mcmc_dir, const std::string& metrics,
                bool reverse_kld) {
  using namespace pknn;
  namespace fs = std::filesystem;
  for (const char* file : {"k_posterior.csv", "joint_posterior.csv"}) {
    const auto p = read_density_csv(fs::path(korea_dir) / file);
    const auto q = read_density_csv(fs::path(mcmc_dir) / file);
    std::cout << file;
    for (const auto& m : split_list(metrics)) {
      double v;
      if (m == "rmse") v = density_rmse(p, q);
      else if (m == "kld") v = reverse_kld ? density_kld(q, p) : density_kld(p, q);
      else if (m == "psnr") v = density_psnr(p, q);
      else if (m == "ssim") v = density_ssim(p, q);
      else throw InputError("unknown metric '" + m + "'");
      std::cout << ' ' << m << '=' << full(v);
    }
    std::cout << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probabilistic kNN classification with Bayesian averaging over K"};
  app.require_subcommand(1);

  CommonOptions classify_opt, bench_opt, post_opt;
  std::string test_path, method = "korea-average", rule = "asymmetric";
  std::size_t knn_k = 0, iterations = 10000;
  std::uint64_t seed = 1;
  auto* classify = app.add_subcommand("classify", "Classify the rows of a test CSV");
  classify_opt.add(classify);
  classify->add_option("--test", test_path, "Test CSV (features only, or same layout as --data)")->required();
  classify->add_option("--method", method, "knn | pknn-fixed | korea-average | korea-optimal | mcmc");
  classify->add_option("--rule", rule, "asymmetric | boltzmann | boltzmann2");
  classify->add_option("--k", knn_k, "Fixed K for knn/pknn-fixed (default: inner CV)");
  classify->add_option("--iterations", iterations, "MCMC iterations");
  classify->add_option("--seed", seed, "Seed");

  std::string name, methods = "knn,pknn-fixed,korea-average,korea-optimal", rules = "asymmetric", out, timings_out;
  std::size_t folds = 4, bench_iterations = 10000, max_features = 0;
  std::uint64_t bench_seed = 1;
  bool micro = false;
  auto* bench = app.add_subcommand("benchmark", "Cross-validated comparison of methods");
  bench_opt.add(bench);
  bench->add_option("--name", name, "Dataset name used in the report");
  bench->add_option("--folds", folds, "Number of CV folds");
  bench->add_option("--seed", bench_seed, "Seed for splits and chains");
  bench->add_option("--methods", methods, "Comma-separated methods");
  bench->add_option("--rules", rules, "Comma-separated neighbour rules");
  bench->add_option("--mcmc-iterations", bench_iterations, "Iterations per MCMC chain");
  bench->add_option("--max-features", max_features, "Keep at most this many evenly spaced features");
  bench->add_option("--out", out, "Write the JSON report here");
  bench->add_option("--timings-out", timings_out, "Write mean wall-clock seconds here");
  bench->add_flag("--micro", micro, "Micro-averaged F-measure instead of macro");

  std::size_t test_index = 0, post_iterations = 10000;
  std::string post_method = "korea", post_rule = "asymmetric", out_dir;
  std::uint64_t post_seed = 1;
  auto* posterior = app.add_subcommand("posterior", "Dump K and (K, beta) posteriors of one held-out row");
  post_opt.add(posterior);
  posterior->add_option("--test-index", test_index, "Row held out as the test point")->required();
  posterior->add_option("--method", post_method, "korea | mcmc");
  posterior->add_option("--rule", post_rule, "asymmetric | boltzmann | boltzmann2");
  posterior->add_option("--out", out_dir, "Output directory")->required();
  posterior->add_option("--iterations", post_iterations, "MCMC iterations");
  posterior->add_option("--seed", post_seed, "MCMC seed");

  std::string korea_dump, mcmc_dump, metric_list = "rmse,kld,psnr,ssim";
  bool reverse_kld = false;
  auto* compare = app.add_subcommand("compare", "Similarity metrics between two posterior dumps");
  compare->add_option("--korea-dump", korea_dump, "KOREA dump directory")->required();
  compare->add_option("--mcmc-dump", mcmc_dump, "MCMC dump directory")->required();
  compare->add_option("--metrics", metric_list, "Comma-separated: rmse,kld,psnr,ssim");
  compare->add_flag("--reverse-kld", reverse_kld, "Use KL(MCMC || KOREA)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInputError;
  }

  try {
    if (*classify) return run_classify(classify_opt, test_path, method, rule, knn_k, iterations, seed);
    if (*bench) {
      return run_benchmark_cmd(bench_opt, name, folds, bench_seed, methods, rules, bench_iterations, max_features,
                               out, timings_out, micro);
    }
    if (*posterior) return run_posterior(post_opt, test_index, post_method, post_rule, out_dir, post_iterations, post_seed);
    if (*compare) return run_compare(korea_dump, mcmc_dump, metric_list, reverse_kld);
  } catch (const pknn::InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const pknn::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  } catch (const pknn::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIoError;
  }
  return kOk;
}
