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

#ifndef ELIR_POSTERIOR_HPP
#define ELIR_POSTERIOR_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include <boost/math/tools/minima.hpp>
#include <nlohmann/json.hpp>

#include "elir/densities.hpp"
#include "elir/error.hpp"
#include "elir/ess.hpp"
#include "elir/models.hpp"
#include "elir/numeric.hpp"

/**
 * \file
 * \brief Grid representation of a one-parameter posterior and its ESS.
 *
 * The grid is uniform in a working coordinate u: u = log(theta) for positive
 * parameters, logit(theta) for parameters in (0, 1) and theta itself on the
 * real line. Expectations use Simpson weights times the Jacobian dtheta/du.
 */

namespace elir {

struct GridConfig {
  std::size_t points = 2001;
  /// Prior quantile range used to seed the grid.
  double seed_tail = 1e-6;
  /// Half-width of the likelihood seed range in MLE standard errors.
  double mle_halfwidth = 10.0;
  unsigned max_doublings = 20;
  /// End-point density must fall below this fraction of the peak.
  double boundary_ratio = 1e-10;
  /// Log-density drop below the peak at which the final grid is trimmed.
  double trim_drop = 46.0;
};

class GridPosterior {
 public:
  GridPosterior(Density prior, SamplingModel model, DataSummary data, const GridConfig& cfg = {})
      : prior_(std::move(prior)), model_(model), data_(std::move(data)) {
    require_compatible(prior_, model_);
    model_.check_summary(data_);
    detail::require(cfg.points >= 5, "grid needs at least 5 points");
    build(cfg);
  }

  [[nodiscard]] const Density& prior() const noexcept { return prior_; }
  [[nodiscard]] const SamplingModel& model() const noexcept { return model_; }
  [[nodiscard]] const DataSummary& data() const noexcept { return data_; }
  [[nodiscard]] const std::vector<double>& theta() const noexcept { return theta_; }
  [[nodiscard]] const std::vector<double>& weights() const noexcept { return weights_; }
  /// Normalised log posterior density in theta at each node.
  [[nodiscard]] const std::vector<double>& log_density() const noexcept { return log_density_; }
  [[nodiscard]] double log_normalizer() const noexcept { return log_z_; }
  [[nodiscard]] double mean() const noexcept { return mean_; }
  [[nodiscard]] double variance() const noexcept { return variance_; }
  [[nodiscard]] std::size_t doublings() const noexcept { return doublings_; }

  /// Unnormalised log posterior at theta.
  [[nodiscard]] double log_kernel(double theta) const {
    return prior_.log_pdf(theta) + model_.log_likelihood(data_, theta);
  }

  /// Posterior information -d^2/dtheta^2 log p(theta | data).
  [[nodiscard]] double information(double theta) const {
    return prior_.information(theta) + model_.likelihood_curvature(data_, theta);
  }

  template <class F>
  [[nodiscard]] double expectation(F&& f) const {
    std::vector<double> terms(theta_.size());
    for (std::size_t i = 0; i < theta_.size(); ++i) {
      if (weights_[i] == 0.0) {
        terms[i] = 0.0;
        continue;
      }
      const double v = f(theta_[i]);
      if (!std::isfinite(v)) {
        detail::fail(ErrorCode::non_finite, "integrand is not finite at a grid node");
      }
      terms[i] = weights_[i] * v;
    }
    return numeric::pairwise_sum(terms);
  }

  /// Posterior mode: grid maximum refined by Brent's method.
  [[nodiscard]] double mode() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < theta_.size(); ++i) {
      if (log_density_[i] > log_density_[best]) {
        best = i;
      }
    }
    if (best == 0 || best + 1 == theta_.size()) {
      detail::fail(ErrorCode::mode_undefined, "posterior density peaks at the end of the grid");
    }
    const auto objective = [this](double t) { return -log_kernel(t); };
    const auto r = boost::math::tools::brent_find_minima(objective, theta_[best - 1], theta_[best + 1], 52);
    return r.first;
  }

 private:
  enum class Coordinate { identity, log, logit };

  [[nodiscard]] double to_theta(double u) const {
    switch (coord_) {
      case Coordinate::identity: return u;
      case Coordinate::log: return std::exp(u);
      case Coordinate::logit: return numeric::logistic(u);
    }
    return u;
  }
  [[nodiscard]] double to_u(double theta) const {
    switch (coord_) {
      case Coordinate::identity: return theta;
      case Coordinate::log: return std::log(theta);
      case Coordinate::logit: return numeric::logit(theta);
    }
    return theta;
  }
  [[nodiscard]] double log_jacobian(double u) const {
    switch (coord_) {
      case Coordinate::identity: return 0.0;
      case Coordinate::log: return u;
      case Coordinate::logit: return -std::log1p(std::exp(-u)) - std::log1p(std::exp(u));
    }
    return 0.0;
  }
  /// Unnormalised log density of u.
  [[nodiscard]] double log_u_density(double u) const {
    const double t = to_theta(u);
    if (!model_.parameter_space().interior(t)) {
      return -kInf;
    }
    return log_kernel(t) + log_jacobian(u);
  }

  void evaluate(double lo, double hi, std::size_t n, std::vector<double>& u, std::vector<double>& lu) const {
    u.resize(n);
    lu.resize(n);
    const double h = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
      u[i] = lo + h * static_cast<double>(i);
      lu[i] = log_u_density(u[i]);
      if (std::isnan(lu[i])) {
        detail::fail(ErrorCode::non_finite, "log posterior is NaN on the grid");
      }
    }
  }

  void build(const GridConfig& cfg) {
    const Interval space = model_.parameter_space();
    coord_ = space.lo == -kInf ? Coordinate::identity : (space.hi == 1.0 ? Coordinate::logit : Coordinate::log);
    std::size_t n = cfg.points % 2 == 1 ? cfg.points : cfg.points + 1;

    double lo = to_u(prior_.quantile(cfg.seed_tail));
    double hi = to_u(prior_.quantile(1.0 - cfg.seed_tail));
    if (const auto est = model_.mle(data_)) {
      // standard error carried to the working coordinate by the delta method
      const double jac = std::exp(log_jacobian(to_u(est->value)));
      const double centre = to_u(est->value);
      const double half = cfg.mle_halfwidth * est->std_error / jac;
      lo = std::min(lo, centre - half);
      hi = std::max(hi, centre + half);
    }

    std::vector<double> u;
    std::vector<double> lu;
    doublings_ = 0;
    for (;;) {
      evaluate(lo, hi, n, u, lu);
      const double peak = *std::max_element(lu.begin(), lu.end());
      if (!std::isfinite(peak)) {
        detail::fail(ErrorCode::non_finite, "posterior kernel has no finite value on the grid");
      }
      const double cut = peak + std::log(cfg.boundary_ratio);
      const bool left_open = lu.front() > cut;
      const bool right_open = lu.back() > cut;
      if (!left_open && !right_open) {
        break;
      }
      if (++doublings_ > cfg.max_doublings) {
        detail::fail(ErrorCode::grid_overflow, "posterior mass not covered after the maximum number of doublings");
      }
      const double width = hi - lo;
      if (left_open) lo -= width;
      if (right_open) hi += width;
    }

    // trim to the region that carries mass and rebuild at full resolution
    const double peak = *std::max_element(lu.begin(), lu.end());
    std::size_t first = 0;
    std::size_t last = lu.size() - 1;
    while (first < last && lu[first] < peak - cfg.trim_drop) ++first;
    while (last > first && lu[last] < peak - cfg.trim_drop) --last;
    first = first > 0 ? first - 1 : 0;
    last = std::min(last + 1, lu.size() - 1);
    if (last - first + 1 < n) {
      lo = u[first];
      hi = u[last];
      evaluate(lo, hi, n, u, lu);
    }

    const double h = (hi - lo) / static_cast<double>(n - 1);
    const std::vector<double> simpson = numeric::simpson_weights(n, h);
    const double top = *std::max_element(lu.begin(), lu.end());
    std::vector<double> mass(n);
    for (std::size_t i = 0; i < n; ++i) {
      mass[i] = simpson[i] * std::exp(lu[i] - top);
    }
    const double z = numeric::pairwise_sum(mass);
    log_z_ = top + std::log(z);
    theta_.resize(n);
    weights_.resize(n);
    log_density_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      theta_[i] = to_theta(u[i]);
      weights_[i] = mass[i] / z;
      log_density_[i] = lu[i] - log_jacobian(u[i]) - log_z_;
    }
    mean_ = expectation([](double t) { return t; });
    variance_ = expectation([this](double t) { return (t - mean_) * (t - mean_); });
  }

  Density prior_;
  SamplingModel model_;
  DataSummary data_;
  Coordinate coord_ = Coordinate::identity;
  std::vector<double> theta_;
  std::vector<double> weights_;
  std::vector<double> log_density_;
  double log_z_ = 0.0;
  double mean_ = kNaN;
  double variance_ = kNaN;
  std::size_t doublings_ = 0;
};

inline GridPosterior build_posterior(const Density& prior, const SamplingModel& m, const DataSummary& data,
                                     const GridConfig& cfg = {}) {
  return GridPosterior(prior, m, data, cfg);
}

template <class F>
double grid_expectation(const GridPosterior& gp, F&& f) {
  return gp.expectation(std::forward<F>(f));
}

/// ESS of the posterior (not reduced by the data size).
inline EssEstimate posterior_ess(const GridPosterior& gp, EssMethod method, const EpsilonPrior& eps = {}) {
  const SamplingModel& m = gp.model();
  EssEstimate out;
  out.method = method;
  out.mode = EssMode::quadrature;
  switch (method) {
    case EssMethod::vr: {
      const double inv = gp.expectation([&](double t) { return 1.0 / m.fisher_unit_info(t); });
      out.value = inv / gp.variance();
      break;
    }
    case EssMethod::pr: {
      const double info = gp.expectation([&](double t) { return m.fisher_unit_info(t); });
      out.value = 1.0 / (gp.variance() * info);
      break;
    }
    case EssMethod::mtm: {
      const double theta_bar = gp.mean();
      double info0 = 0.0;
      switch (eps.strategy) {
        case EpsilonPrior::Strategy::analytic_limit: info0 = detail::epsilon_limit_information(m, theta_bar); break;
        case EpsilonPrior::Strategy::mean_matched_inflated:
          info0 = detail::inflated_epsilon_prior(m, theta_bar, gp.variance(), eps.variance_factor).information(theta_bar);
          break;
        case EpsilonPrior::Strategy::explicit_density:
          detail::require(eps.density.has_value(), "explicit epsilon prior needs a density");
          info0 = eps.density->information(theta_bar);
          break;
      }
      out.value = (gp.information(theta_bar) - info0) / detail::predictive_unit_info(m, theta_bar);
      break;
    }
    case EssMethod::mtm_p: {
      const double mode = gp.mode();
      out.value = gp.information(mode) / m.fisher_unit_info(mode);
      break;
    }
    case EssMethod::elir:
      out.value = gp.expectation([&](double t) { return gp.information(t) / m.fisher_unit_info(t); });
      break;
  }
  return out;
}

inline nlohmann::json to_json(const GridPosterior& gp) {
  return {{"theta", gp.theta()},
          {"log_density", gp.log_density()},
          {"mean", gp.mean()},
          {"variance", gp.variance()},
          {"log_normalizer", gp.log_normalizer()}};
}

}  // namespace elir

#endif  // ELIR_POSTERIOR_HPP
