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

#ifndef ELIR_DENSITIES_HPP
#define ELIR_DENSITIES_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <boost/math/constants/constants.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/random/beta_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/student_t_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <nlohmann/json.hpp>

#include "elir/error.hpp"
#include "elir/numeric.hpp"
#include "elir/random.hpp"

/**
 * \file
 * \brief One-dimensional parametric densities and their mixtures.
 *
 * Each family supplies its log-density together with the analytic first and
 * second derivatives. The negated second derivative is the information of the
 * density at a point, the quantity every information-based sample size is
 * built from.
 */

namespace elir {

/// Open interval (lo, hi); infinite ends allowed.
struct Interval {
  double lo;
  double hi;

  [[nodiscard]] constexpr bool interior(double x) const noexcept { return x > lo && x < hi; }
  [[nodiscard]] constexpr bool contains(const Interval& other) const noexcept {
    return other.lo >= lo && other.hi <= hi;
  }
  friend constexpr bool operator==(const Interval&, const Interval&) = default;
};

inline constexpr Interval kRealLine{-kInf, kInf};
inline constexpr Interval kPositive{0.0, kInf};
inline constexpr Interval kUnit{0.0, 1.0};

/// Log-density and its derivatives at a point; prior_info = -d2log_p.
struct InfoEvaluation {
  double theta;
  double log_p;
  double dlog_p;
  double d2log_p;
  double prior_info;
};

struct Moments {
  double mean;
  double variance;
};

namespace detail {

inline double log_beta_fn(double a, double b) {
  return boost::math::lgamma(a) + boost::math::lgamma(b) - boost::math::lgamma(a + b);
}

inline void require_positive(double value, std::string_view what) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    fail(ErrorCode::invalid_argument, std::string(what) + " must be positive and finite");
  }
}

inline void require_finite(double value, std::string_view what) {
  if (!std::isfinite(value)) {
    fail(ErrorCode::invalid_argument, std::string(what) + " must be finite");
  }
}

inline double standard_normal_quantile(double p) {
  return -boost::math::constants::root_two<double>() * boost::math::erfc_inv(2.0 * p);
}

inline double standard_normal_cdf(double z) { return 0.5 * boost::math::erfc(-z / boost::math::constants::root_two<double>()); }

inline constexpr double kLogRootTwoPi = 0.91893853320467274178;

}  // namespace detail

// ---------------------------------------------------------------------------
// Families
// ---------------------------------------------------------------------------

struct Normal {
  double mean;
  double sd;

  static constexpr std::string_view name = "normal";
  void validate() const {
    detail::require_finite(mean, "normal mean");
    detail::require_positive(sd, "normal sd");
  }
  [[nodiscard]] Interval support() const { return kRealLine; }
  [[nodiscard]] double log_pdf(double x) const {
    const double z = (x - mean) / sd;
    return -0.5 * z * z - std::log(sd) - detail::kLogRootTwoPi;
  }
  [[nodiscard]] double dlog_pdf(double x) const { return -(x - mean) / (sd * sd); }
  [[nodiscard]] double d2log_pdf(double /*x*/) const { return -1.0 / (sd * sd); }
  [[nodiscard]] double cdf(double x) const { return detail::standard_normal_cdf((x - mean) / sd); }
  [[nodiscard]] double quantile(double p) const { return mean + sd * detail::standard_normal_quantile(p); }
  [[nodiscard]] double draw(Engine& rng) const { return boost::random::normal_distribution<double>(mean, sd)(rng); }
  [[nodiscard]] std::optional<double> first_moment() const { return mean; }
  [[nodiscard]] std::optional<double> variance() const { return sd * sd; }
  [[nodiscard]] std::optional<double> mode() const { return mean; }
};

/// Location-scale Student-t.
struct StudentT {
  double location;
  double scale;
  double df;

  static constexpr std::string_view name = "student_t";
  void validate() const {
    detail::require_finite(location, "student_t location");
    detail::require_positive(scale, "student_t scale");
    detail::require_positive(df, "student_t df");
  }
  [[nodiscard]] Interval support() const { return kRealLine; }
  [[nodiscard]] double log_pdf(double x) const {
    const double z = (x - location) / scale;
    return boost::math::lgamma((df + 1.0) / 2.0) - boost::math::lgamma(df / 2.0) -
           0.5 * std::log(df * boost::math::constants::pi<double>()) - std::log(scale) -
           (df + 1.0) / 2.0 * std::log1p(z * z / df);
  }
  [[nodiscard]] double dlog_pdf(double x) const {
    const double z = (x - location) / scale;
    return -(df + 1.0) / df * z / (1.0 + z * z / df) / scale;
  }
  [[nodiscard]] double d2log_pdf(double x) const {
    const double z = (x - location) / scale;
    const double q = 1.0 + z * z / df;
    return -(df + 1.0) / df * (1.0 - z * z / df) / (q * q) / (scale * scale);
  }
  [[nodiscard]] double cdf(double x) const {
    return boost::math::cdf(boost::math::students_t_distribution<double>(df), (x - location) / scale);
  }
  [[nodiscard]] double quantile(double p) const {
    return location + scale * boost::math::quantile(boost::math::students_t_distribution<double>(df), p);
  }
  [[nodiscard]] double draw(Engine& rng) const {
    return location + scale * boost::random::student_t_distribution<double>(df)(rng);
  }
  [[nodiscard]] std::optional<double> first_moment() const {
    return df > 1.0 ? std::optional<double>(location) : std::nullopt;
  }
  [[nodiscard]] std::optional<double> variance() const {
    return df > 2.0 ? std::optional<double>(scale * scale * df / (df - 2.0)) : std::nullopt;
  }
  [[nodiscard]] std::optional<double> mode() const { return location; }
};

struct Beta {
  double a;
  double b;

  static constexpr std::string_view name = "beta";
  void validate() const {
    detail::require_positive(a, "beta a");
    detail::require_positive(b, "beta b");
  }
  [[nodiscard]] Interval support() const { return kUnit; }
  [[nodiscard]] double log_pdf(double x) const {
    return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - log_beta();
  }
  [[nodiscard]] double dlog_pdf(double x) const { return (a - 1.0) / x - (b - 1.0) / (1.0 - x); }
  [[nodiscard]] double d2log_pdf(double x) const {
    return -(a - 1.0) / (x * x) - (b - 1.0) / ((1.0 - x) * (1.0 - x));
  }
  [[nodiscard]] double cdf(double x) const {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    return boost::math::ibeta(a, b, x);
  }
  [[nodiscard]] double quantile(double p) const {
    try {
      return boost::math::ibeta_inv(a, b, p);
    } catch (const boost::math::evaluation_error&) {
      // leading tail term I_x(a, b) ~ x^a / (a B(a, b)); only reached in the far tails
      if (p < 0.5) return std::exp((std::log(p * a) + log_beta()) / a);
      return -std::expm1((std::log((1.0 - p) * b) + log_beta()) / b);
    }
  }
  [[nodiscard]] double draw(Engine& rng) const { return boost::random::beta_distribution<double>(a, b)(rng); }
  [[nodiscard]] std::optional<double> first_moment() const { return a / (a + b); }
  [[nodiscard]] std::optional<double> variance() const {
    const double n = a + b;
    return a * b / (n * n * (n + 1.0));
  }
  [[nodiscard]] std::optional<double> mode() const {
    if (a > 1.0 && b > 1.0) {
      return (a - 1.0) / (a + b - 2.0);
    }
    return std::nullopt;
  }
  [[nodiscard]] double log_beta() const {
    return boost::math::lgamma(a) + boost::math::lgamma(b) - boost::math::lgamma(a + b);
  }
};

/// Gamma with shape `a` and rate `b`.
struct Gamma {
  double a;
  double b;

  static constexpr std::string_view name = "gamma";
  void validate() const {
    detail::require_positive(a, "gamma a");
    detail::require_positive(b, "gamma b");
  }
  [[nodiscard]] Interval support() const { return kPositive; }
  [[nodiscard]] double log_pdf(double x) const {
    return a * std::log(b) - boost::math::lgamma(a) + (a - 1.0) * std::log(x) - b * x;
  }
  [[nodiscard]] double dlog_pdf(double x) const { return (a - 1.0) / x - b; }
  [[nodiscard]] double d2log_pdf(double x) const { return -(a - 1.0) / (x * x); }
  [[nodiscard]] double cdf(double x) const { return x <= 0.0 ? 0.0 : boost::math::gamma_p(a, b * x); }
  [[nodiscard]] double quantile(double p) const { return boost::math::gamma_p_inv(a, p) / b; }
  [[nodiscard]] double draw(Engine& rng) const {
    return boost::random::gamma_distribution<double>(a, 1.0)(rng) / b;
  }
  [[nodiscard]] std::optional<double> first_moment() const { return a / b; }
  [[nodiscard]] std::optional<double> variance() const { return a / (b * b); }
  [[nodiscard]] std::optional<double> mode() const {
    return a > 1.0 ? std::optional<double>((a - 1.0) / b) : std::nullopt;
  }
};

/// Inverse-gamma with shape `a` and scale `b`: 1/x ~ Gamma(a, rate b).
struct InverseGamma {
  double a;
  double b;

  static constexpr std::string_view name = "inverse_gamma";
  void validate() const {
    detail::require_positive(a, "inverse_gamma a");
    detail::require_positive(b, "inverse_gamma b");
  }
  [[nodiscard]] Interval support() const { return kPositive; }
  [[nodiscard]] double log_pdf(double x) const {
    return a * std::log(b) - boost::math::lgamma(a) - (a + 1.0) * std::log(x) - b / x;
  }
  [[nodiscard]] double dlog_pdf(double x) const { return -(a + 1.0) / x + b / (x * x); }
  [[nodiscard]] double d2log_pdf(double x) const { return (a + 1.0) / (x * x) - 2.0 * b / (x * x * x); }
  [[nodiscard]] double cdf(double x) const { return x <= 0.0 ? 0.0 : boost::math::gamma_q(a, b / x); }
  [[nodiscard]] double quantile(double p) const { return b / boost::math::gamma_q_inv(a, p); }
  [[nodiscard]] double draw(Engine& rng) const {
    return b / boost::random::gamma_distribution<double>(a, 1.0)(rng);
  }
  [[nodiscard]] std::optional<double> first_moment() const {
    return a > 1.0 ? std::optional<double>(b / (a - 1.0)) : std::nullopt;
  }
  [[nodiscard]] std::optional<double> variance() const {
    if (a > 2.0) {
      return b * b / ((a - 1.0) * (a - 1.0) * (a - 2.0));
    }
    return std::nullopt;
  }
  [[nodiscard]] std::optional<double> mode() const { return b / (a + 1.0); }
};

/// Generalized gamma: p(x) = f x^{a-1} exp{-(x/s)^f} / {s^a Gamma(a/f)}.
/// Gamma for f = 1 and Weibull for f = a.
struct GeneralizedGamma {
  double a;
  double s;
  double f;

  static constexpr std::string_view name = "generalized_gamma";
  void validate() const {
    detail::require_positive(a, "generalized_gamma a");
    detail::require_positive(s, "generalized_gamma s");
    detail::require_positive(f, "generalized_gamma f");
  }
  [[nodiscard]] Interval support() const { return kPositive; }
  [[nodiscard]] double log_pdf(double x) const {
    return std::log(f) + (a - 1.0) * std::log(x) - std::pow(x / s, f) - a * std::log(s) -
           boost::math::lgamma(a / f);
  }
  [[nodiscard]] double dlog_pdf(double x) const { return (a - 1.0) / x - f * std::pow(x / s, f) / x; }
  [[nodiscard]] double d2log_pdf(double x) const {
    return -(a - 1.0) / (x * x) - f * (f - 1.0) * std::pow(x / s, f) / (x * x);
  }
  [[nodiscard]] double cdf(double x) const { return x <= 0.0 ? 0.0 : boost::math::gamma_p(a / f, std::pow(x / s, f)); }
  [[nodiscard]] double quantile(double p) const { return s * std::pow(boost::math::gamma_p_inv(a / f, p), 1.0 / f); }
  [[nodiscard]] double draw(Engine& rng) const {
    return s * std::pow(boost::random::gamma_distribution<double>(a / f, 1.0)(rng), 1.0 / f);
  }
  /// E(x^r) = s^r Gamma{(a+r)/f} / Gamma(a/f); defined for a + r > 0.
  [[nodiscard]] std::optional<double> raw_moment(double r) const {
    if (!(a + r > 0.0)) {
      return std::nullopt;
    }
    return std::pow(s, r) * std::exp(boost::math::lgamma((a + r) / f) - boost::math::lgamma(a / f));
  }
  [[nodiscard]] std::optional<double> first_moment() const { return raw_moment(1.0); }
  [[nodiscard]] std::optional<double> variance() const {
    const double m = *raw_moment(1.0);
    return *raw_moment(2.0) - m * m;
  }
  [[nodiscard]] std::optional<double> mode() const {
    return a > 1.0 ? std::optional<double>(s * std::pow((a - 1.0) / f, 1.0 / f)) : std::nullopt;
  }
};

/// log x ~ N(m0, s0^2).
struct LogNormal {
  double m0;
  double s0;

  static constexpr std::string_view name = "log_normal";
  void validate() const {
    detail::require_finite(m0, "log_normal m0");
    detail::require_positive(s0, "log_normal s0");
  }
  [[nodiscard]] Interval support() const { return kPositive; }
  [[nodiscard]] double log_pdf(double x) const {
    const double z = (std::log(x) - m0) / s0;
    return -0.5 * z * z - std::log(x) - std::log(s0) - detail::kLogRootTwoPi;
  }
  [[nodiscard]] double dlog_pdf(double x) const { return -(1.0 + (std::log(x) - m0) / (s0 * s0)) / x; }
  [[nodiscard]] double d2log_pdf(double x) const {
    return (1.0 + (std::log(x) - m0) / (s0 * s0)) / (x * x) - 1.0 / (s0 * s0 * x * x);
  }
  [[nodiscard]] double cdf(double x) const {
    return x <= 0.0 ? 0.0 : detail::standard_normal_cdf((std::log(x) - m0) / s0);
  }
  [[nodiscard]] double quantile(double p) const { return std::exp(m0 + s0 * detail::standard_normal_quantile(p)); }
  [[nodiscard]] double draw(Engine& rng) const {
    return std::exp(boost::random::normal_distribution<double>(m0, s0)(rng));
  }
  [[nodiscard]] std::optional<double> first_moment() const { return std::exp(m0 + 0.5 * s0 * s0); }
  [[nodiscard]] std::optional<double> variance() const {
    return std::expm1(s0 * s0) * std::exp(2.0 * m0 + s0 * s0);
  }
  [[nodiscard]] std::optional<double> mode() const { return std::exp(m0 - s0 * s0); }
};

/// |Z| * scale for standard normal Z.
struct HalfNormal {
  double scale;

  static constexpr std::string_view name = "half_normal";
  void validate() const { detail::require_positive(scale, "half_normal scale"); }
  [[nodiscard]] Interval support() const { return kPositive; }
  [[nodiscard]] double log_pdf(double x) const {
    const double z = x / scale;
    return std::log(2.0) - detail::kLogRootTwoPi - std::log(scale) - 0.5 * z * z;
  }
  [[nodiscard]] double dlog_pdf(double x) const { return -x / (scale * scale); }
  [[nodiscard]] double d2log_pdf(double /*x*/) const { return -1.0 / (scale * scale); }
  [[nodiscard]] double cdf(double x) const {
    return x <= 0.0 ? 0.0 : boost::math::erf(x / (scale * boost::math::constants::root_two<double>()));
  }
  [[nodiscard]] double quantile(double p) const {
    return scale * boost::math::constants::root_two<double>() * boost::math::erf_inv(p);
  }
  [[nodiscard]] double draw(Engine& rng) const {
    return std::abs(boost::random::normal_distribution<double>(0.0, scale)(rng));
  }
  [[nodiscard]] std::optional<double> first_moment() const {
    return scale * std::sqrt(2.0 / boost::math::constants::pi<double>());
  }
  [[nodiscard]] std::optional<double> variance() const {
    return scale * scale * (1.0 - 2.0 / boost::math::constants::pi<double>());
  }
  [[nodiscard]] std::optional<double> mode() const { return std::nullopt; }
};

/// Density of logit(x) for x ~ Beta(a, b); a Beta prior on the log-odds scale.
struct LogitBeta {
  double a;
  double b;

  static constexpr std::string_view name = "logit_beta";
  void validate() const {
    detail::require_positive(a, "logit_beta a");
    detail::require_positive(b, "logit_beta b");
  }
  [[nodiscard]] Interval support() const { return kRealLine; }
  [[nodiscard]] double log_pdf(double eta) const {
    // log mu = -log(1+e^-eta), log(1-mu) = -log(1+e^eta)
    const double log_mu = -std::log1p(std::exp(-eta));
    const double log_1mmu = -std::log1p(std::exp(eta));
    return a * log_mu + b * log_1mmu - Beta{a, b}.log_beta();
  }
  [[nodiscard]] double dlog_pdf(double eta) const { return a - (a + b) * numeric::logistic(eta); }
  [[nodiscard]] double d2log_pdf(double eta) const {
    return -(a + b) * numeric::logistic(eta) * numeric::logistic(-eta);
  }
  [[nodiscard]] double cdf(double eta) const { return boost::math::ibeta(a, b, numeric::logistic(eta)); }
  [[nodiscard]] double quantile(double p) const {
    double upper = 0.0;  // 1 - mu, without cancellation
    const double mu = boost::math::ibeta_inv(a, b, p, &upper);
    return std::log(mu) - std::log(upper);
  }
  [[nodiscard]] double draw(Engine& rng) const {
    const double x = boost::random::gamma_distribution<double>(a, 1.0)(rng);
    const double y = boost::random::gamma_distribution<double>(b, 1.0)(rng);
    return std::log(x) - std::log(y);
  }
  [[nodiscard]] std::optional<double> first_moment() const {
    return boost::math::digamma(a) - boost::math::digamma(b);
  }
  [[nodiscard]] std::optional<double> variance() const {
    return boost::math::trigamma(a) + boost::math::trigamma(b);
  }
  [[nodiscard]] std::optional<double> mode() const { return std::log(a / b); }
};

/// Density of log(x) for x ~ Gamma(a, rate b); a Gamma prior on the log scale.
struct LogGamma {
  double a;
  double b;

  static constexpr std::string_view name = "log_gamma";
  void validate() const {
    detail::require_positive(a, "log_gamma a");
    detail::require_positive(b, "log_gamma b");
  }
  [[nodiscard]] Interval support() const { return kRealLine; }
  [[nodiscard]] double log_pdf(double eta) const {
    return a * std::log(b) - boost::math::lgamma(a) + a * eta - b * std::exp(eta);
  }
  [[nodiscard]] double dlog_pdf(double eta) const { return a - b * std::exp(eta); }
  [[nodiscard]] double d2log_pdf(double eta) const { return -b * std::exp(eta); }
  [[nodiscard]] double cdf(double eta) const { return boost::math::gamma_p(a, b * std::exp(eta)); }
  [[nodiscard]] double quantile(double p) const { return std::log(boost::math::gamma_p_inv(a, p) / b); }
  [[nodiscard]] double draw(Engine& rng) const {
    return std::log(boost::random::gamma_distribution<double>(a, 1.0)(rng) / b);
  }
  [[nodiscard]] std::optional<double> first_moment() const { return boost::math::digamma(a) - std::log(b); }
  [[nodiscard]] std::optional<double> variance() const { return boost::math::trigamma(a); }
  [[nodiscard]] std::optional<double> mode() const { return std::log(a / b); }
};

// ---------------------------------------------------------------------------
// Mixtures
// ---------------------------------------------------------------------------

using MixtureKernel = std::variant<Normal, Beta>;

struct MixtureComponent {
  double weight;
  MixtureKernel kernel;
};

/// Weighted mixture of normal or of Beta kernels (one kind per mixture).
class MixtureDensity {
 public:
  static constexpr std::string_view name = "mixture";
  static constexpr std::size_t kMaxComponents = 32;

  explicit MixtureDensity(std::vector<MixtureComponent> components) : components_(std::move(components)) {
    validate();
    log_weights_.reserve(components_.size());
    log_offsets_.reserve(components_.size());
    for (const auto& c : components_) {
      log_weights_.push_back(std::log(c.weight));
      log_offsets_.push_back(log_weights_.back() + std::visit([](const auto& d) { return log_normalizer(d); }, c.kernel));
    }
  }

  [[nodiscard]] const std::vector<MixtureComponent>& components() const noexcept { return components_; }
  [[nodiscard]] std::size_t size() const noexcept { return components_.size(); }
  [[nodiscard]] bool is_beta() const noexcept { return std::holds_alternative<Beta>(components_.front().kernel); }

  [[nodiscard]] Interval support() const { return is_beta() ? kUnit : kRealLine; }

  [[nodiscard]] double log_pdf(double x) const {
    std::array<double, kMaxComponents> terms{};
    for (std::size_t k = 0; k < size(); ++k) {
      terms[k] = log_offsets_[k] + std::visit([x](const auto& d) { return log_kernel(d, x); }, components_[k].kernel);
    }
    return numeric::log_sum_exp(std::span<const double>(terms.data(), size()));
  }

  /// Mixture information: with responsibilities
  /// rho_k = w_k p_k / p, score = sum rho_k d_k and
  /// i = score^2 - sum rho_k (d_k^2 + d2_k).
  [[nodiscard]] InfoEvaluation evaluate(double x) const {
    std::array<double, kMaxComponents> log_terms{};
    std::array<double, kMaxComponents> d1{};
    std::array<double, kMaxComponents> d2{};
    for (std::size_t k = 0; k < size(); ++k) {
      std::visit(
          [&](const auto& d) {
            log_terms[k] = log_offsets_[k] + log_kernel(d, x);
            d1[k] = d.dlog_pdf(x);
            d2[k] = d.d2log_pdf(x);
          },
          components_[k].kernel);
    }
    const double log_p = numeric::log_sum_exp(std::span<const double>(log_terms.data(), size()));
    double score = 0.0;
    double curvature = 0.0;
    for (std::size_t k = 0; k < size(); ++k) {
      const double rho = std::exp(log_terms[k] - log_p);
      score += rho * d1[k];
      curvature += rho * (d1[k] * d1[k] + d2[k]);
    }
    const double info = score * score - curvature;
    return {x, log_p, score, -info, info};
  }

  [[nodiscard]] double dlog_pdf(double x) const { return evaluate(x).dlog_p; }
  [[nodiscard]] double d2log_pdf(double x) const { return evaluate(x).d2log_p; }

  [[nodiscard]] double cdf(double x) const {
    double total = 0.0;
    for (const auto& c : components_) {
      total += c.weight * std::visit([x](const auto& d) { return d.cdf(x); }, c.kernel);
    }
    return total;
  }

  [[nodiscard]] double quantile(double p) const {
    double lo = kInf;
    double hi = -kInf;
    for (const auto& c : components_) {
      const double q = std::visit([p](const auto& d) { return d.quantile(p); }, c.kernel);
      lo = std::min(lo, q);
      hi = std::max(hi, q);
    }
    if (!(hi > lo)) {
      return lo;
    }
    boost::uintmax_t iterations = 200;
    const auto [left, right] = boost::math::tools::toms748_solve(
        [&](double x) { return cdf(x) - p; }, lo, hi, boost::math::tools::eps_tolerance<double>(50), iterations);
    return 0.5 * (left + right);
  }

  [[nodiscard]] double draw(Engine& rng) const {
    const double u = boost::random::uniform_01<double>()(rng);
    double cumulative = 0.0;
    std::size_t pick = size() - 1;
    for (std::size_t k = 0; k + 1 < size(); ++k) {
      cumulative += components_[k].weight;
      if (u < cumulative) {
        pick = k;
        break;
      }
    }
    return std::visit([&rng](const auto& d) { return d.draw(rng); }, components_[pick].kernel);
  }

  [[nodiscard]] std::optional<double> first_moment() const {
    double m = 0.0;
    for (const auto& c : components_) {
      m += c.weight * *std::visit([](const auto& d) { return d.first_moment(); }, c.kernel);
    }
    return m;
  }

  [[nodiscard]] std::optional<double> variance() const {
    const double m = *first_moment();
    double second = 0.0;
    for (const auto& c : components_) {
      std::visit(
          [&](const auto& d) {
            const double mk = *d.first_moment();
            second += c.weight * (*d.variance() + mk * mk);
          },
          c.kernel);
    }
    return second - m * m;
  }

  [[nodiscard]] std::optional<double> mode() const;

 private:
  // log density split into a constant and an x-dependent kernel
  static double log_normalizer(const Normal& d) { return -std::log(d.sd) - detail::kLogRootTwoPi; }
  static double log_normalizer(const Beta& d) { return -d.log_beta(); }
  static double log_kernel(const Normal& d, double x) {
    const double z = (x - d.mean) / d.sd;
    return -0.5 * z * z;
  }
  static double log_kernel(const Beta& d, double x) { return (d.a - 1.0) * std::log(x) + (d.b - 1.0) * std::log1p(-x); }

  void validate() const {
    if (components_.empty()) {
      detail::fail(ErrorCode::invalid_argument, "mixture needs at least one component");
    }
    if (components_.size() > kMaxComponents) {
      detail::fail(ErrorCode::invalid_argument, "mixture has too many components");
    }
    const auto kind = components_.front().kernel.index();
    double total = 0.0;
    for (const auto& c : components_) {
      if (c.kernel.index() != kind) {
        detail::fail(ErrorCode::invalid_argument, "mixture components must share one family");
      }
      detail::require_positive(c.weight, "mixture weight");
      std::visit([](const auto& d) { d.validate(); }, c.kernel);
      total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      detail::fail(ErrorCode::invalid_argument, "mixture weights must sum to 1");
    }
  }

  std::vector<MixtureComponent> components_;
  std::vector<double> log_weights_;
  std::vector<double> log_offsets_;
};

inline std::optional<double> MixtureDensity::mode() const {
  if (is_beta()) {
    for (const auto& c : components_) {
      const auto& beta = std::get<Beta>(c.kernel);
      if (beta.a < 1.0 || beta.b < 1.0) {
        return std::nullopt;  // unbounded at a boundary
      }
    }
  }
  double lo = kInf;
  double hi = -kInf;
  for (const auto& c : components_) {
    std::visit(
        [&](const auto& d) {
          lo = std::min(lo, d.quantile(1e-7));
          hi = std::max(hi, d.quantile(1.0 - 1e-7));
        },
        c.kernel);
  }
  constexpr std::size_t kScan = 4001;
  std::vector<double> xs(kScan);
  std::vector<double> lp(kScan);
  for (std::size_t i = 0; i < kScan; ++i) {
    xs[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(kScan - 1);
    lp[i] = log_pdf(xs[i]);
  }
  struct Peak {
    double x;
    double log_p;
  };
  std::vector<Peak> peaks;
  for (std::size_t i = 1; i + 1 < kScan; ++i) {
    if (lp[i] >= lp[i - 1] && lp[i] > lp[i + 1]) {
      const auto [x, neg] = boost::math::tools::brent_find_minima([this](double t) { return -log_pdf(t); }, xs[i - 1],
                                                                  xs[i + 1], 52);
      peaks.push_back({x, -neg});
    }
  }
  const std::size_t edge_best = lp.front() > lp.back() ? 0 : kScan - 1;
  if (peaks.empty()) {
    return std::nullopt;
  }
  const auto best = std::max_element(peaks.begin(), peaks.end(), [](const Peak& l, const Peak& r) { return l.log_p < r.log_p; });
  if (lp[edge_best] >= best->log_p) {
    return std::nullopt;
  }
  const double spread = hi - lo;
  for (const auto& p : peaks) {
    if (&p != &*best && std::abs(p.log_p - best->log_p) < 1e-9 && std::abs(p.x - best->x) > 1e-6 * spread) {
      return std::nullopt;  // tie between separate modes
    }
  }
  return best->x;
}

// ---------------------------------------------------------------------------
// Density
// ---------------------------------------------------------------------------

/// Immutable one-dimensional density; any of the families above.
class Density {
 public:
  using Family = std::variant<Normal, StudentT, Beta, Gamma, InverseGamma, GeneralizedGamma, LogNormal, HalfNormal,
                              LogitBeta, LogGamma, MixtureDensity>;

  template <class F>
    requires std::is_constructible_v<Family, F>
  Density(F family) : family_(std::move(family)) {  // NOLINT(google-explicit-constructor)
    std::visit([](const auto& d) {
      if constexpr (!std::is_same_v<std::decay_t<decltype(d)>, MixtureDensity>) {
        d.validate();
      }
    }, family_);
  }

  static Density normal(double mean, double sd) { return Normal{mean, sd}; }
  static Density student_t(double location, double scale, double df) { return StudentT{location, scale, df}; }
  static Density beta(double a, double b) { return Beta{a, b}; }
  static Density gamma(double a, double rate) { return Gamma{a, rate}; }
  static Density inverse_gamma(double a, double b) { return InverseGamma{a, b}; }
  static Density generalized_gamma(double a, double s, double f) { return GeneralizedGamma{a, s, f}; }
  /// Weibull with shape `a` and scale `s`, i.e. generalized_gamma(a, s, a).
  static Density weibull(double a, double s) { return GeneralizedGamma{a, s, a}; }
  static Density log_normal(double m0, double s0) { return LogNormal{m0, s0}; }
  static Density half_normal(double scale) { return HalfNormal{scale}; }
  static Density logit_beta(double a, double b) { return LogitBeta{a, b}; }
  static Density log_gamma(double a, double rate) { return LogGamma{a, rate}; }
  static Density mixture(std::vector<MixtureComponent> components) { return MixtureDensity(std::move(components)); }

  [[nodiscard]] const Family& family() const noexcept { return family_; }
  template <class T>
  [[nodiscard]] const T* as() const noexcept {
    return std::get_if<T>(&family_);
  }
  [[nodiscard]] bool is_mixture() const noexcept { return std::holds_alternative<MixtureDensity>(family_); }
  [[nodiscard]] std::string_view family_name() const {
    return std::visit([](const auto& d) { return std::decay_t<decltype(d)>::name; }, family_);
  }

  [[nodiscard]] Interval support() const {
    return std::visit([](const auto& d) { return d.support(); }, family_);
  }
  [[nodiscard]] double log_pdf(double x) const {
    if (!support().interior(x)) {
      return -kInf;
    }
    return std::visit([x](const auto& d) { return d.log_pdf(x); }, family_);
  }
  [[nodiscard]] double pdf(double x) const { return std::exp(log_pdf(x)); }

  /// Analytic derivatives; OutOfSupport unless x is strictly interior.
  [[nodiscard]] InfoEvaluation derivatives(double x) const {
    if (!support().interior(x)) {
      detail::fail(ErrorCode::out_of_support, "point " + std::to_string(x) + " is not interior to the support");
    }
    return std::visit(
        [x](const auto& d) -> InfoEvaluation {
          if constexpr (std::is_same_v<std::decay_t<decltype(d)>, MixtureDensity>) {
            return d.evaluate(x);
          } else {
            const double d2 = d.d2log_pdf(x);
            return {x, d.log_pdf(x), d.dlog_pdf(x), d2, -d2};
          }
        },
        family_);
  }
  [[nodiscard]] double information(double x) const { return derivatives(x).prior_info; }

  [[nodiscard]] double cdf(double x) const {
    return std::visit([x](const auto& d) { return d.cdf(x); }, family_);
  }
  [[nodiscard]] double quantile(double p) const {
    detail::require(p > 0.0 && p < 1.0, "quantile probability must lie in (0, 1)");
    return std::visit([p](const auto& d) { return d.quantile(p); }, family_);
  }

  /// Mean; MeanUndefined when it does not exist.
  [[nodiscard]] double mean() const {
    const auto m = std::visit([](const auto& d) { return d.first_moment(); }, family_);
    if (!m) {
      detail::fail(ErrorCode::mean_undefined, std::string(family_name()) + " has no mean", 1);
    }
    return *m;
  }

  /// Mean and variance; MomentUndefined (detail = order) when absent.
  [[nodiscard]] Moments moments() const {
    const auto m = std::visit([](const auto& d) { return d.first_moment(); }, family_);
    if (!m) {
      detail::fail(ErrorCode::moment_undefined, std::string(family_name()) + " has no mean", 1);
    }
    const auto v = std::visit([](const auto& d) { return d.variance(); }, family_);
    if (!v) {
      detail::fail(ErrorCode::moment_undefined, std::string(family_name()) + " has no variance", 2);
    }
    return {*m, *v};
  }

  /// Unique interior mode; ModeUndefined otherwise.
  [[nodiscard]] double mode() const {
    const auto m = std::visit([](const auto& d) { return d.mode(); }, family_);
    if (!m) {
      detail::fail(ErrorCode::mode_undefined, std::string(family_name()) + " has no unique interior mode");
    }
    return *m;
  }

  [[nodiscard]] double draw(Engine& rng) const {
    return std::visit([&rng](const auto& d) { return d.draw(rng); }, family_);
  }

  /// `n` draws from a single stream seeded by `seed`.
  [[nodiscard]] std::vector<double> sample(std::size_t n, std::uint64_t seed) const {
    Engine rng = make_engine(seed);
    std::vector<double> out(n);
    for (auto& x : out) {
      x = draw(rng);
    }
    return out;
  }

 private:
  Family family_;
};

inline InfoEvaluation log_pdf_derivatives(const Density& d, double theta) { return d.derivatives(theta); }

/// Information of a mixture at `theta`.
inline double mixture_information(const MixtureDensity& m, double theta) {
  if (!m.support().interior(theta)) {
    detail::fail(ErrorCode::out_of_support, "point is not interior to the mixture support");
  }
  return m.evaluate(theta).prior_info;
}

inline std::vector<double> sample(const Density& d, std::size_t n, std::uint64_t seed) {
  detail::require(n >= 1, "sample size must be at least 1");
  return d.sample(n, seed);
}

inline Moments moments(const Density& d) { return d.moments(); }

/// Derivatives of an arbitrary log-density by central differences; for
/// densities without analytic derivatives.
inline InfoEvaluation finite_difference_derivatives(const std::function<double(double)>& log_pdf, double theta) {
  const double h = numeric::fallback_step(theta);
  const double first = numeric::central_difference(log_pdf, theta, h).first;
  // the second difference needs a wider step to keep rounding error small
  const double second = numeric::central_difference(log_pdf, theta, 100.0 * h).second;
  return {theta, log_pdf(theta), first, second, -second};
}

/// Prior expectations of `g` for several tail trims at once. Integration
/// segments are split at fixed quantiles and shared between the trims. With
/// tail t > 0 only the central (1 - 2 t) mass is used and the result is
/// normalised by that mass; with t == 0 the integral runs over the whole
/// support.
template <class G>
std::vector<double> trimmed_expectations(const Density& d, G&& g, std::span<const double> tails) {
  constexpr double kRelTol = 1e-10;
  constexpr unsigned kDepth = 12;
  constexpr std::array<double, 11> kInner{1e-8, 1e-4, 0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99, 1.0 - 1e-4, 1.0 - 1e-8};
  std::vector<double> probs(kInner.begin(), kInner.end());
  for (const double t : tails) {
    detail::require(t >= 0.0 && t < 0.5, "expectation tail must lie in [0, 0.5)");
    if (t > 0.0) {
      probs.push_back(t);
      probs.push_back(1.0 - t);
    }
  }
  std::sort(probs.begin(), probs.end());
  probs.erase(std::unique(probs.begin(), probs.end()), probs.end());
  std::vector<double> points;
  for (const double p : probs) points.push_back(std::max(points.empty() ? -kInf : points.back(), d.quantile(p)));
  const auto point = [&](double p) {
    return points[static_cast<std::size_t>(std::lower_bound(probs.begin(), probs.end(), p) - probs.begin())];
  };

  const Interval support = d.support();
  const auto weighted = [&](double x) {
    const double p = d.pdf(x);
    return p > 0.0 ? p * g(x) : 0.0;
  };
  const auto pdf = [&d](double x) { return d.pdf(x); };
  // power-law behaviour near a finite bound is smooth in the log distance to
  // it; points base +- e carry a rounding error of about eps |base| / e
  const auto noise_floor = [kRelTol](double base, double e) {
    return std::max(kRelTol, 16.0 * std::numeric_limits<double>::epsilon() * std::abs(base) / e);
  };
  const auto segment = [&](const auto& f, double lo, double hi, double abs_tol) {
    if (!(hi > lo)) return 0.0;
    if (std::isfinite(support.lo) && std::isfinite(hi) && lo > support.lo && hi - support.lo > 8.0 * (lo - support.lo)) {
      const double base = support.lo;
      return numeric::integrate(
          [&](double u) {
            const double e = std::exp(u);
            return f(base + e) * e;
          },
          std::log(lo - base), std::log(hi - base), noise_floor(base, lo - base), kDepth, abs_tol);
    }
    if (std::isfinite(support.hi) && std::isfinite(lo) && hi < support.hi && support.hi - lo > 8.0 * (support.hi - hi)) {
      const double base = support.hi;
      return numeric::integrate(
          [&](double u) {
            const double e = std::exp(u);
            return f(base - e) * e;
          },
          std::log(base - hi), std::log(base - lo), noise_floor(base, base - hi), kDepth, abs_tol);
    }
    return numeric::integrate(f, lo, hi, kRelTol, kDepth, abs_tol);
  };

  // segments holding a negligible share of the total need no relative accuracy
  double rough_total = 0.0;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    rough_total += std::abs(numeric::integrate_coarse(weighted, points[i], points[i + 1]));
  }
  const double total_tol = 1e-12 * rough_total;

  // trims share their segments
  std::vector<std::optional<std::pair<double, double>>> cache(points.size());
  std::vector<double> out;
  for (const double t : tails) {
    if (t == 0.0) {
      out.push_back(kNaN);
      continue;
    }
    const auto first = std::lower_bound(probs.begin(), probs.end(), t) - probs.begin();
    const auto last = std::lower_bound(probs.begin(), probs.end(), 1.0 - t) - probs.begin();
    double total = 0.0;
    double mass = 0.0;
    for (auto i = first; i < last; ++i) {
      const auto k = static_cast<std::size_t>(i);
      if (!cache[k]) {
        cache[k] = std::pair{segment(weighted, points[k], points[k + 1], total_tol),
                             segment(pdf, points[k], points[k + 1], 1e-12)};
      }
      total += cache[k]->first;
      mass += cache[k]->second;
    }
    out.push_back(total / mass);
  }
  if (std::find(tails.begin(), tails.end(), 0.0) == tails.end()) return out;

  // Whole support. Next to a finite bound the last stretch of distance
  // `reach` uses a local fit F(e) = C e^beta (1 + c1 e) of F(e) = e f(x(e)),
  // because representable points are too coarse there for an integrable
  // singularity and the integrand may overflow at the bound itself.
  const auto edge_weighted = [&](double x) {
    const double v = weighted(x);
    return std::isfinite(v) ? v : 0.0;
  };
  const auto near_bound = [&](double base, double sign, double reach) {
    const auto at = [&](double e) { return edge_weighted(base + sign * e) * e; };
    const std::array<double, 3> f{at(reach), at(reach / 2.0), at(reach / 4.0)};
    if (f[0] == 0.0 && f[1] == 0.0 && f[2] == 0.0) return 0.0;
    const bool same_sign = (f[0] > 0.0 && f[1] > 0.0 && f[2] > 0.0) || (f[0] < 0.0 && f[1] < 0.0 && f[2] < 0.0);
    const auto direct = [&] {
      return numeric::integrate_singular([&](double e) { return edge_weighted(base + sign * e); }, 0.0, reach);
    };
    if (!same_sign) return direct();
    const double s = f[0] < 0.0 ? -1.0 : 1.0;
    const double y1 = std::log(s * f[0]);
    const double y2 = std::log(s * f[1]);
    const double y3 = std::log(s * f[2]);
    const double c1_reach = 4.0 * ((y1 - y2) - (y2 - y3));
    const double beta = ((y2 - y3) - c1_reach / 4.0) / std::numbers::ln2;
    // not a power law here, e.g. exp(-1/e); such integrands are smooth at the bound
    if (std::abs(c1_reach) > 0.1) return direct();
    if (!(beta > 0.0)) return s * kInf;
    return f[0] * std::exp(-c1_reach) * (1.0 / beta + c1_reach / (beta + 1.0));
  };
  std::vector<double> full;
  for (const double p : kInner) full.push_back(point(p));
  double total = 0.0;
  if (std::isfinite(support.lo)) {
    const double reach = support.lo == 0.0 ? 0.5 * (full.front() - support.lo) : 1e-6 * std::abs(support.lo);
    std::erase_if(full, [&](double x) { return x - support.lo <= 2.0 * reach; });
    full.insert(full.begin(), support.lo + reach);
    total += near_bound(support.lo, 1.0, reach);
  } else {
    full.insert(full.begin(), support.lo);
  }
  if (std::isfinite(support.hi)) {
    const double reach = support.hi == 0.0 ? 0.5 * (support.hi - full.back()) : 1e-6 * std::abs(support.hi);
    std::erase_if(full, [&](double x) { return support.hi - x <= 2.0 * reach; });
    full.push_back(support.hi - reach);
    total += near_bound(support.hi, -1.0, reach);
  } else {
    full.push_back(support.hi);
  }
  for (std::size_t i = 0; i + 1 < full.size(); ++i) {
    total += segment(weighted, full[i], full[i + 1], total_tol);
  }
  for (std::size_t i = 0; i < tails.size(); ++i) {
    if (tails[i] == 0.0) out[i] = total;
  }
  return out;
}

/// Prior expectation of `g`; see trimmed_expectations for `tail`.
template <class G>
double expectation(const Density& d, G&& g, double tail = 0.0) {
  const std::array<double, 1> tails{tail};
  return trimmed_expectations(d, std::forward<G>(g), tails).front();
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace detail {

inline double json_number(const nlohmann::json& params, const char* key) {
  if (!params.is_object() || !params.contains(key) || !params.at(key).is_number()) {
    fail(ErrorCode::parse_error, std::string("missing numeric parameter '") + key + "'");
  }
  return params.at(key).get<double>();
}

inline MixtureKernel kernel_from_json(const nlohmann::json& j);

}  // namespace detail

inline Density density_from_json(const nlohmann::json& j) {
  using detail::json_number;
  if (!j.is_object() || !j.contains("family") || !j.at("family").is_string()) {
    detail::fail(ErrorCode::parse_error, "density needs a string 'family'");
  }
  const auto family = j.at("family").get<std::string>();
  if (family == "mixture") {
    if (!j.contains("components") || !j.at("components").is_array()) {
      detail::fail(ErrorCode::parse_error, "mixture needs a 'components' array");
    }
    std::vector<MixtureComponent> comps;
    for (const auto& c : j.at("components")) {
      comps.push_back({json_number(c, "weight"), detail::kernel_from_json(c)});
    }
    return Density::mixture(std::move(comps));
  }
  const nlohmann::json params = j.value("params", nlohmann::json::object());
  if (family == "normal") return Density::normal(json_number(params, "mean"), json_number(params, "sd"));
  if (family == "student_t") {
    return Density::student_t(json_number(params, "location"), json_number(params, "scale"), json_number(params, "df"));
  }
  if (family == "beta") return Density::beta(json_number(params, "a"), json_number(params, "b"));
  if (family == "gamma") return Density::gamma(json_number(params, "a"), json_number(params, "b"));
  if (family == "inverse_gamma") return Density::inverse_gamma(json_number(params, "a"), json_number(params, "b"));
  if (family == "generalized_gamma") {
    return Density::generalized_gamma(json_number(params, "a"), json_number(params, "s"), json_number(params, "f"));
  }
  if (family == "weibull") return Density::weibull(json_number(params, "a"), json_number(params, "s"));
  if (family == "log_normal") return Density::log_normal(json_number(params, "m0"), json_number(params, "s0"));
  if (family == "half_normal") return Density::half_normal(json_number(params, "scale"));
  if (family == "logit_beta") return Density::logit_beta(json_number(params, "a"), json_number(params, "b"));
  if (family == "log_gamma") return Density::log_gamma(json_number(params, "a"), json_number(params, "b"));
  detail::fail(ErrorCode::parse_error, "unknown density family '" + family + "'");
}

inline MixtureKernel detail::kernel_from_json(const nlohmann::json& j) {
  const Density d = density_from_json(j);
  if (const auto* n = d.as<Normal>()) return *n;
  if (const auto* b = d.as<Beta>()) return *b;
  fail(ErrorCode::parse_error, "mixture components must be normal or beta");
}

namespace detail {

inline nlohmann::json params_json(const Normal& d) { return {{"mean", d.mean}, {"sd", d.sd}}; }
inline nlohmann::json params_json(const StudentT& d) {
  return {{"location", d.location}, {"scale", d.scale}, {"df", d.df}};
}
inline nlohmann::json params_json(const Beta& d) { return {{"a", d.a}, {"b", d.b}}; }
inline nlohmann::json params_json(const Gamma& d) { return {{"a", d.a}, {"b", d.b}}; }
inline nlohmann::json params_json(const InverseGamma& d) { return {{"a", d.a}, {"b", d.b}}; }
inline nlohmann::json params_json(const GeneralizedGamma& d) { return {{"a", d.a}, {"s", d.s}, {"f", d.f}}; }
inline nlohmann::json params_json(const LogNormal& d) { return {{"m0", d.m0}, {"s0", d.s0}}; }
inline nlohmann::json params_json(const HalfNormal& d) { return {{"scale", d.scale}}; }
inline nlohmann::json params_json(const LogitBeta& d) { return {{"a", d.a}, {"b", d.b}}; }
inline nlohmann::json params_json(const LogGamma& d) { return {{"a", d.a}, {"b", d.b}}; }

}  // namespace detail

inline nlohmann::json to_json(const Density& d) {
  return std::visit(
      [](const auto& f) -> nlohmann::json {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, MixtureDensity>) {
          nlohmann::json comps = nlohmann::json::array();
          for (const auto& c : f.components()) {
            std::visit(
                [&](const auto& k) {
                  comps.push_back({{"weight", c.weight},
                                   {"family", std::decay_t<decltype(k)>::name},
                                   {"params", detail::params_json(k)}});
                },
                c.kernel);
          }
          return {{"family", "mixture"}, {"components", comps}};
        } else {
          return {{"family", T::name}, {"params", detail::params_json(f)}};
        }
      },
      d.family());
}

}  // namespace elir

#endif  // ELIR_DENSITIES_HPP
