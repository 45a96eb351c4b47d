// Copyright 2026 The elir Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ELIR_NUMERIC_HPP
#define ELIR_NUMERIC_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace elir {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

namespace numeric {

/// Pairwise (cascade) summation; the result depends only on element order.
inline double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kLeaf = 32;
  if (values.size() <= kLeaf) {
    double total = 0.0;
    for (const double v : values) {
      total += v;
    }
    return total;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

inline double log_sum_exp(std::span<const double> values) {
  if (values.empty()) {
    return -kInf;
  }
  const double peak = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(peak)) {
    return peak;
  }
  double total = 0.0;
  for (const double v : values) {
    total += std::exp(v - peak);
  }
  return peak + std::log(total);
}

inline double logistic(double x) noexcept {
  if (x >= 0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) noexcept { return std::log(p) - std::log1p(-p); }

namespace detail {

using KronrodRule = boost::math::quadrature::gauss_kronrod<double, 61>;

// Bisection driver around the fixed rule. Boost's own adaptive driver
// compares the unscaled segment error with a scaled tolerance and so
// refines short intervals to the depth limit.
template <class F>
double kronrod_bisect(F& f, double lo, double hi, double rel_tol, double abs_tol, unsigned depth) {
  const double mid = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  double error = 0.0;
  const double estimate = half * KronrodRule::integrate([&](double t) { return f(mid + half * t); }, -1.0, 1.0, 0,
                                                        0.0, &error);
  error *= half;
  const double local_tol = std::abs(estimate) * rel_tol;
  if (abs_tol == 0.0) abs_tol = local_tol;
  if (depth == 0 || error <= local_tol || error <= abs_tol) return estimate;
  return kronrod_bisect(f, lo, mid, rel_tol, abs_tol / 2.0, depth - 1) +
         kronrod_bisect(f, mid, hi, rel_tol, abs_tol / 2.0, depth - 1);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod (61-point) integral of `f` over [lo, hi]; infinite
/// ends are mapped onto a finite interval. Refinement stops once the error
/// is below rel_tol of the estimate or below abs_tol.
template <class F>
double integrate(F&& f, double lo, double hi, double rel_tol = 1e-10, unsigned max_depth = 12, double abs_tol = 0.0) {
  if (!(hi > lo)) {
    return 0.0;
  }
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    double error = 0.0;
    return detail::KronrodRule::integrate(std::forward<F>(f), lo, hi, max_depth, rel_tol, &error);
  }
  return detail::kronrod_bisect(f, lo, hi, rel_tol, abs_tol, max_depth);
}

/// Tanh-sinh integral of `f` over the finite [lo, hi]; tolerates integrable
/// endpoint singularities such as x^-0.9 at lo.
template <class F>
double integrate_singular(F&& f, double lo, double hi, double rel_tol = 1e-10) {
  if (!(hi > lo)) {
    return 0.0;
  }
  thread_local boost::math::quadrature::tanh_sinh<double> rule;
  try {
    return rule.integrate(f, lo, hi, rel_tol);
  } catch (const std::exception&) {
    return integrate(f, lo, hi, rel_tol);
  }
}

/// Single 61-point rule over a finite [lo, hi], no refinement.
template <class F>
double integrate_coarse(F&& f, double lo, double hi) {
  if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) {
    return 0.0;
  }
  const double mid = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  return half * detail::KronrodRule::integrate([&](double t) { return f(mid + half * t); }, -1.0, 1.0, 0, 0.0);
}

/// Integral over consecutive segments of a sorted breakpoint list.
template <class F>
double integrate_segments(F&& f, std::span<const double> breaks, double rel_tol = 1e-10) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    total += integrate(f, breaks[i], breaks[i + 1], rel_tol);
  }
  return total;
}

/// Composite Simpson weights for an odd number of equally spaced nodes.
inline std::vector<double> simpson_weights(std::size_t nodes, double spacing) {
  std::vector<double> w(nodes, 0.0);
  if (nodes < 3) {
    std::fill(w.begin(), w.end(), spacing);
    return w;
  }
  for (std::size_t i = 0; i < nodes; ++i) {
    if (i == 0 || i == nodes - 1) {
      w[i] = 1.0;
    } else {
      w[i] = (i % 2 == 1) ? 4.0 : 2.0;
    }
    w[i] *= spacing / 3.0;
  }
  return w;
}

/// First and second derivative of `f` at x by central differences.
struct FiniteDifference {
  double first;
  double second;
};

inline FiniteDifference central_difference(const std::function<double(double)>& f, double x, double h) {
  const double fp = f(x + h);
  const double fm = f(x - h);
  const double f0 = f(x);
  return {(fp - fm) / (2.0 * h), (fp - 2.0 * f0 + fm) / (h * h)};
}

/// Step used by the finite-difference fallback for a point `x`.
inline double fallback_step(double x) noexcept { return std::max(1e-5 * std::abs(x), 1e-7); }

/// Mean and standard error of a sample, summed pairwise.
struct SampleMean {
  double mean;
  double std_error;
};

inline SampleMean sample_mean(std::span<const double> values) {
  const auto n = static_cast<double>(values.size());
  const double mean = pairwise_sum(values) / n;
  std::vector<double> sq(values.size());
  std::transform(values.begin(), values.end(), sq.begin(), [mean](double v) { return (v - mean) * (v - mean); });
  const double var = values.size() > 1 ? pairwise_sum(sq) / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n)};
}

}  // namespace numeric
}  // namespace elir

#endif  // ELIR_NUMERIC_HPP
