#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pknn/dataset.hpp"
#include "pknn/error.hpp"

namespace pknn {

enum class FAverage { Macro, Micro };

/// F-measure of a labelling. Macro: mean per-class F1 over the classes that
/// occur in `truth` (a class with P + R = 0 scores 0). Micro: pooled F1, which
/// equals accuracy for single-label predictions.
inline double f_measure(std::span<const Label> predicted, std::span<const Label> truth,
                        int class_count, FAverage average = FAverage::Macro) {
  if (predicted.size() != truth.size()) throw InputError("f_measure: length mismatch");
  if (truth.empty()) throw InputError("f_measure: empty input");
  const auto C = static_cast<std::size_t>(class_count);
  std::vector<double> tp(C, 0.0), fp(C, 0.0), fn(C, 0.0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto p = static_cast<std::size_t>(predicted[i]);
    const auto t = static_cast<std::size_t>(truth[i]);
    if (p >= C || t >= C) throw InputError("f_measure: label out of range");
    if (p == t) {
      tp[t] += 1.0;
    } else {
      fp[p] += 1.0;
      fn[t] += 1.0;
    }
  }
  if (average == FAverage::Micro) {
    double a = 0.0, b = 0.0, c = 0.0;
    for (std::size_t k = 0; k < C; ++k) a += tp[k], b += fp[k], c += fn[k];
    return 2.0 * a / (2.0 * a + b + c);
  }
  double sum = 0.0;
  int present = 0;
  for (std::size_t k = 0; k < C; ++k) {
    if (tp[k] + fn[k] == 0.0) continue;
    ++present;
    const double denom = 2.0 * tp[k] + fp[k] + fn[k];
    sum += denom > 0.0 ? 2.0 * tp[k] / denom : 0.0;
  }
  return sum / present;
}

/// Total-variation distance: half the L1 distance.
inline double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw InputError("total_variation: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

/// Row-major density over (K) or (K, beta) cells.
struct DensityGrid {
  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t cols = 1;

  DensityGrid() = default;
  DensityGrid(std::vector<double> v, std::size_t r, std::size_t c = 1)
      : values(std::move(v)), rows(r), cols(c) {
    if (values.size() != rows * cols) throw InputError("density grid: value count does not match shape");
  }
  static DensityGrid vector(std::vector<double> v) {
    const std::size_t n = v.size();
    return DensityGrid(std::move(v), n, 1);
  }

  double sum() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  bool normalized(double tol = 1e-9) const { return std::abs(sum() - 1.0) <= tol; }
};

namespace detail {

inline void check_shapes(const DensityGrid& p, const DensityGrid& q) {
  if (p.rows != q.rows || p.cols != q.cols) {
    throw InputError("density shapes differ: " + std::to_string(p.rows) + "x" + std::to_string(p.cols) +
                     " vs " + std::to_string(q.rows) + "x" + std::to_string(q.cols));
  }
  if (p.values.empty()) throw InputError("density grids are empty");
}

inline double mse(const DensityGrid& p, const DensityGrid& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    const double d = p.values[i] - q.values[i];
    s += d * d;
  }
  return s / static_cast<double>(p.values.size());
}

}  // namespace detail

inline double density_rmse(const DensityGrid& p, const DensityGrid& q) {
  detail::check_shapes(p, q);
  return std::sqrt(detail::mse(p, q));
}

/// KL(p || q) after adding epsilon to every cell of both and renormalizing.
inline double density_kld(const DensityGrid& p, const DensityGrid& q, double epsilon = 1e-12) {
  detail::check_shapes(p, q);
  if (!(epsilon > 0.0)) throw InputError("kld: epsilon must be positive");
  if (!p.normalized() || !q.normalized()) throw InputError("kld: inputs must be normalized");
  const double n = static_cast<double>(p.values.size());
  const double zp = p.sum() + n * epsilon;
  const double zq = q.sum() + n * epsilon;
  double s = 0.0;
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    const double a = (p.values[i] + epsilon) / zp;
    const double b = (q.values[i] + epsilon) / zq;
    s += a * std::log(a / b);
  }
  return std::max(0.0, s);
}

inline constexpr double kPsnrCap = 300.0;

/// 10 log10(peak^2 / MSE) with peak = max cell of the reference grid q;
/// identical grids give kPsnrCap.
inline double density_psnr(const DensityGrid& p, const DensityGrid& q) {
  detail::check_shapes(p, q);
  const double e = detail::mse(p, q);
  if (e == 0.0) return kPsnrCap;
  const double peak = *std::max_element(q.values.begin(), q.values.end());
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / e));
}

/// Single-window SSIM over the flattened grids, with c1 = (0.01 L)^2 and
/// c2 = (0.03 L)^2 where L is the largest cell of either grid (1 if both are zero).
inline double density_ssim(const DensityGrid& p, const DensityGrid& q) {
  detail::check_shapes(p, q);
  const double n = static_cast<double>(p.values.size());
  double mp = 0.0, mq = 0.0, L = 0.0;
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    mp += p.values[i];
    mq += q.values[i];
    L = std::max({L, p.values[i], q.values[i]});
  }
  if (L == 0.0) L = 1.0;
  mp /= n;
  mq /= n;
  double vp = 0.0, vq = 0.0, cov = 0.0;
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    const double a = p.values[i] - mp, b = q.values[i] - mq;
    vp += a * a;
    vq += b * b;
    cov += a * b;
  }
  vp /= n;
  vq /= n;
  cov /= n;
  const double c1 = (0.01 * L) * (0.01 * L);
  const double c2 = (0.03 * L) * (0.03 * L);
  return (2.0 * mp * mq + c1) * (2.0 * cov + c2) / ((mp * mp + mq * mq + c1) * (vp + vq + c2));
}

/// Index of the cell nearest to x on an ascending axis (ties to the lower cell);
/// values outside the axis land in the end cells.
inline std::size_t nearest_cell(std::span<const double> axis, double x) {
  if (axis.empty()) throw InputError("nearest_cell: empty axis");
  const auto it = std::lower_bound(axis.begin(), axis.end(), x);
  if (it == axis.begin()) return 0;
  if (it == axis.end()) return axis.size() - 1;
  const auto hi = static_cast<std::size_t>(it - axis.begin());
  return (x - axis[hi - 1] <= axis[hi] - x) ? hi - 1 : hi;
}

}  // namespace pknn
