#pragma once

#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pknn/csv.hpp"
#include "pknn/dataset.hpp"
#include "pknn/error.hpp"
#include "pknn/korea.hpp"
#include "pknn/mcmc.hpp"
#include "pknn/metrics.hpp"

namespace pknn {

/// A K-posterior and a joint (K, beta) posterior on a shared beta axis.
struct PosteriorDump {
  DensityGrid k_posterior;  // k_max x 1
  DensityGrid joint;        // k_max x |beta axis|
  std::vector<double> beta_axis;
};

namespace detail {

inline std::string full_precision(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p);
  if (!os) throw IoError("cannot write " + p.string());
  return os;
}

}  // namespace detail

/// KOREA's posteriors: alpha~ over K and lambda~ over (K, grid beta).
inline PosteriorDump korea_posterior_dump(const PredictiveResult& r) {
  PosteriorDump d;
  const std::size_t k_max = r.order.k_max;
  const std::size_t m = r.grid.points.size();
  d.beta_axis = r.grid.points;
  d.k_posterior = DensityGrid::vector(r.order.weights);
  std::vector<double> joint(k_max * m);
  for (std::size_t k = 1; k <= k_max; ++k)
    for (std::size_t b = 0; b < m; ++b) joint[(k - 1) * m + b] = r.mixture_weight(b, k);
  d.joint = DensityGrid(std::move(joint), k_max, m);
  return d;
}

/// MCMC histograms on the same axes: p^(K), and (K, beta) counts with every
/// beta sample assigned to its nearest grid cell (end cells absorb the rest).
inline PosteriorDump mcmc_posterior_dump(const ChainTrace& trace, std::size_t k_max,
                                         const std::vector<double>& beta_axis) {
  PosteriorDump d;
  d.beta_axis = beta_axis;
  d.k_posterior = DensityGrid::vector(trace.order_histogram(k_max));
  const std::size_t m = beta_axis.size();
  std::vector<double> joint(k_max * m, 0.0);
  for (std::size_t i = trace.burn_in; i < trace.states.size(); ++i) {
    const auto& s = trace.states[i];
    joint[(s.k - 1) * m + nearest_cell(beta_axis, s.beta)] += 1.0;
  }
  for (double& v : joint) v /= static_cast<double>(trace.retained());
  d.joint = DensityGrid(std::move(joint), k_max, m);
  return d;
}

/// Writes k_posterior.csv (k,weight), joint_posterior.csv (k,beta,weight) and
/// the plot-ready long.csv (series,k,beta,weight) into `dir`.
inline void write_posterior_dump(const PosteriorDump& d, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  {
    auto os = detail::open_out(dir / "k_posterior.csv");
    os << "k,weight\n";
    for (std::size_t k = 0; k < d.k_posterior.rows; ++k) {
      os << k + 1 << ',' << detail::full_precision(d.k_posterior.values[k]) << '\n';
    }
  }
  {
    auto os = detail::open_out(dir / "joint_posterior.csv");
    os << "k,beta,weight\n";
    for (std::size_t k = 0; k < d.joint.rows; ++k)
      for (std::size_t b = 0; b < d.joint.cols; ++b)
        os << k + 1 << ',' << detail::full_precision(d.beta_axis[b]) << ','
           << detail::full_precision(d.joint.values[k * d.joint.cols + b]) << '\n';
  }
  {
    auto os = detail::open_out(dir / "long.csv");
    os << "series,k,beta,weight\n";
    for (std::size_t k = 0; k < d.k_posterior.rows; ++k)
      os << "k," << k + 1 << ",," << detail::full_precision(d.k_posterior.values[k]) << '\n';
    for (std::size_t k = 0; k < d.joint.rows; ++k)
      for (std::size_t b = 0; b < d.joint.cols; ++b)
        os << "joint," << k + 1 << ',' << detail::full_precision(d.beta_axis[b]) << ','
           << detail::full_precision(d.joint.values[k * d.joint.cols + b]) << '\n';
  }
}

/// Reads a `k,weight` or `k,beta,weight` density file. 2-D files become a
/// grid with one row per distinct k and one column per distinct beta, both in
/// order of first appearance; `beta_axis` receives the betas when non-null.
inline DensityGrid read_density_csv(const std::filesystem::path& path,
                                    std::vector<double>* beta_axis = nullptr) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw InputError(path.string() + ": empty density file");
  const auto header = detail::split_csv_line(line);
  const bool two_d = header.size() == 3;
  if (!(header.size() == 2 && header[0] == "k" && header[1] == "weight") &&
      !(two_d && header[0] == "k" && header[1] == "beta" && header[2] == "weight")) {
    throw InputError(path.string() + ": unexpected density header '" + line + "'");
  }
  std::vector<double> ks, betas, weights;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size()) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": ragged row");
    }
    std::vector<double> v(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (!detail::parse_double(cells[i], v[i])) {
        throw InputError(path.string() + ":" + std::to_string(line_no) + ": non-numeric value");
      }
    }
    ks.push_back(v[0]);
    if (two_d) betas.push_back(v[1]);
    weights.push_back(v.back());
  }
  if (weights.empty()) throw InputError(path.string() + ": no rows");
  if (!two_d) return DensityGrid::vector(std::move(weights));

  std::vector<double> k_axis, b_axis;
  std::map<double, std::size_t> k_pos, b_pos;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (k_pos.emplace(ks[i], k_axis.size()).second) k_axis.push_back(ks[i]);
    if (b_pos.emplace(betas[i], b_axis.size()).second) b_axis.push_back(betas[i]);
  }
  if (k_axis.size() * b_axis.size() != weights.size()) {
    throw InputError(path.string() + ": rows do not form a full (k, beta) grid");
  }
  std::vector<double> grid(weights.size(), 0.0);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    grid[k_pos[ks[i]] * b_axis.size() + b_pos[betas[i]]] = weights[i];
  }
  if (beta_axis) *beta_axis = b_axis;
  return DensityGrid(std::move(grid), k_axis.size(), b_axis.size());
}

/// Leave-one-out posterior of row `test_index` of `data`: the other rows are
/// the training set.
struct PosteriorRequest {
  std::size_t test_index = 0;
  KoreaConfig korea{};
  McmcConfig mcmc{};
  bool use_mcmc = false;
  bool standardize = false;
};

struct PosteriorOutput {
  PosteriorDump dump;
  PredictiveResult korea;
  std::optional<ChainTrace> trace;
};

inline PosteriorOutput compute_posterior(const LabeledDataset& data, const PosteriorRequest& req) {
  if (req.test_index >= data.size()) throw InputError("test index out of range");
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (i != req.test_index) rows.push_back(i);
  LabeledDataset train = data.subset(rows);
  FeatureVector y = data.point(req.test_index);
  if (req.standardize) {
    const Standardizer s(train.points());
    train = s.apply(train);
    y = s.apply(y);
  }
  const std::size_t k_max = resolve_k_max(req.korea, train.size());
  const PknnJointModel model(train, y, req.korea.rule, k_max);
  PosteriorOutput out;
  out.korea = classify(model, req.korea);
  if (req.use_mcmc) {
    out.trace = run_chain(model, req.mcmc, req.test_index);
    out.dump = mcmc_posterior_dump(*out.trace, k_max, out.korea.grid.points);
  } else {
    out.dump = korea_posterior_dump(out.korea);
  }
  return out;
}

/// Computes and writes the posterior dump (plus trace.csv for MCMC) into `dir`.
inline PosteriorOutput dump_posterior(const LabeledDataset& data, const PosteriorRequest& req,
                                      const std::filesystem::path& dir) {
  auto out = compute_posterior(data, req);
  write_posterior_dump(out.dump, dir);
  if (out.trace) {
    auto os = detail::open_out(dir / "trace.csv");
    write_trace_csv(*out.trace, os);
  }
  return out;
}

}  // namespace pknn
