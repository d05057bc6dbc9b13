#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "pknn/error.hpp"

namespace pknn {

/// Gamma(shape, scale) prior on the interaction strength.
struct GammaPrior {
  double shape = 2.0;
  double scale = 10.0;

  void validate() const {
    if (!(shape > 0.0) || !(scale > 0.0)) throw InputError("gamma prior needs shape, scale > 0");
  }

  double log_pdf(double beta) const {
    if (!(beta > 0.0)) return -INFINITY;
    return (shape - 1.0) * std::log(beta) - beta / scale - std::lgamma(shape) -
           shape * std::log(scale);
  }

  /// Mode of the density; 0 when shape <= 1.
  double mode() const { return shape > 1.0 ? (shape - 1.0) * scale : 0.0; }
};

/// Gaussian approximation of a 1-D posterior on (0, beta_max].
struct LaplaceFit {
  std::size_t k = 0;
  double mode = 0.0;
  double variance = 0.0;
  double log_target_at_mode = 0.0;
  /// The maximizer sits on a bound of the search interval.
  bool at_boundary = false;
  /// Curvature at the mode was not negative; variance comes from quadrature.
  bool curvature_fallback = false;
};

struct LaplaceOptions {
  double lower = 1e-6;
  int scan_points = 64;
  int max_iterations = 100;
  double tolerance = 1e-10;
  int quadrature_points = 2000;
};

namespace detail {

struct Derivs {
  double value, first, second;
};

template <class F>
Derivs central_differences(F& f, double x) {
  // keep x - h strictly positive
  const double h = std::min(1e-4 * std::max(1.0, std::abs(x)), 0.5 * x);
  const double fm = f(x - h);
  const double f0 = f(x);
  const double fp = f(x + h);
  return {f0, (fp - fm) / (2.0 * h), (fp - 2.0 * f0 + fm) / (h * h)};
}

/// Second central moment of exp(f) over (0, hi] by the trapezoid rule.
template <class F>
double quadrature_variance(F& f, double hi, int points, double log_scale) {
  std::vector<double> x(static_cast<std::size_t>(points)), w(x.size());
  const double step = hi / points;
  for (int i = 0; i < points; ++i) {
    x[static_cast<std::size_t>(i)] = step * (i + 1);
    const double v = f(x[static_cast<std::size_t>(i)]) - log_scale;
    w[static_cast<std::size_t>(i)] = std::isfinite(v) ? std::exp(v) : 0.0;
  }
  w.back() *= 0.5;  // trapezoid end weight at hi; the left end (beta=0) carries zero mass
  double m0 = 0.0, m1 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    m0 += w[i];
    m1 += w[i] * x[i];
  }
  if (!(m0 > 0.0)) return NAN;
  const double mean = m1 / m0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) m2 += w[i] * (x[i] - mean) * (x[i] - mean);
  return m2 / m0;
}

}  // namespace detail

/// Mode and curvature variance of the log-density `log_target` on
/// [options.lower, hi].
///
/// A coarse scan picks the starting bracket; safeguarded Newton with central
/// differences refines it, taking golden-section steps whenever the curvature
/// is not negative or the Newton step leaves the bracket. Throws
/// NumericalError if no finite value or variance can be produced.
template <class F>
LaplaceFit laplace_fit(F&& log_target, double hi, const LaplaceOptions& options = {}) {
  const double lo = options.lower;
  if (!(hi > lo)) throw InputError("laplace_fit: upper bound must exceed " + std::to_string(lo));
  constexpr double kGolden = 0.3819660112501051;
  auto& f = log_target;

  const int m = std::max(options.scan_points, 2);
  std::vector<double> xs(static_cast<std::size_t>(m + 1)), fs(xs.size());
  std::size_t best = 0;
  for (int i = 0; i <= m; ++i) {
    const auto u = static_cast<std::size_t>(i);
    xs[u] = lo + (hi - lo) * i / m;
    fs[u] = f(xs[u]);
    if (fs[u] > fs[best] || !std::isfinite(fs[best])) best = u;
  }
  if (!std::isfinite(fs[best])) throw NumericalError("laplace_fit: log-target is not finite on the scan");

  LaplaceFit fit;
  double a = xs[best == 0 ? 0 : best - 1];
  double c = xs[std::min<std::size_t>(best + 1, xs.size() - 1)];
  double x = xs[best];
  bool done = false;

  if (best + 1 == xs.size()) {
    if (detail::central_differences(f, hi).first >= 0.0) {
      fit.at_boundary = true;
      done = true;
    }
  } else if (best == 0) {
    if (detail::central_differences(f, lo).first <= 0.0) {
      fit.at_boundary = true;
      done = true;
    }
  }

  for (int it = 0; !done && it < options.max_iterations; ++it) {
    const auto d = detail::central_differences(f, x);
    if (d.first > 0.0) a = x; else c = x;
    const double scale = std::max(1.0, std::abs(x));
    if (c - a < options.tolerance * scale || d.first == 0.0) break;
    double next;
    if (d.second < 0.0 && std::isfinite(d.second)) {
      next = x - d.first / d.second;
      if (!(next > a && next < c)) next = d.first > 0.0 ? x + kGolden * (c - x) : x - kGolden * (x - a);
    } else {
      next = d.first > 0.0 ? x + kGolden * (c - x) : x - kGolden * (x - a);
    }
    if (std::abs(next - x) < options.tolerance * scale) {
      x = next;
      break;
    }
    x = next;
  }
  if (!fit.at_boundary && (x <= lo || x >= hi)) fit.at_boundary = true;
  x = std::clamp(x, lo, hi);

  const auto d = detail::central_differences(f, x);
  fit.mode = x;
  fit.log_target_at_mode = d.value;
  if (d.second < 0.0 && std::isfinite(d.second)) {
    fit.variance = -1.0 / d.second;
  } else {
    fit.curvature_fallback = true;
    fit.variance = detail::quadrature_variance(f, hi, options.quadrature_points, d.value);
  }
  if (!std::isfinite(fit.variance) || !(fit.variance > 0.0) || !std::isfinite(fit.log_target_at_mode)) {
    throw NumericalError("laplace_fit: no usable variance at mode " + std::to_string(x));
  }
  return fit;
}

/// Log density of N(mean, variance) restricted and renormalized to (0, hi].
inline double log_truncated_normal_pdf(double x, double mean, double variance, double hi) {
  const double sd = std::sqrt(variance);
  const double z_hi = (hi - mean) / sd;
  const double z_lo = (0.0 - mean) / sd;
  // upper-tail form keeps precision when both bounds lie far on the same side
  double mass;
  if (z_lo > 0.0) {
    mass = 0.5 * (std::erfc(z_lo / std::numbers::sqrt2) - std::erfc(z_hi / std::numbers::sqrt2));
  } else {
    mass = 0.5 * (std::erfc(-z_hi / std::numbers::sqrt2) - std::erfc(-z_lo / std::numbers::sqrt2));
  }
  const double r = (x - mean) / sd;
  return -0.5 * r * r - 0.5 * std::log(2.0 * std::numbers::pi * variance) - std::log(mass);
}

inline double log_normal_pdf(double x, double mean, double variance) {
  const double r = x - mean;
  return -0.5 * r * r / variance - 0.5 * std::log(2.0 * std::numbers::pi * variance);
}

}  // namespace pknn
