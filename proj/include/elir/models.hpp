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

#ifndef ELIR_MODELS_HPP
#define ELIR_MODELS_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/special_functions/beta.hpp>
#include <boost/random/bernoulli_distribution.hpp>
#include <boost/random/binomial_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <nlohmann/json.hpp>

#include "elir/densities.hpp"
#include "elir/error.hpp"
#include "elir/numeric.hpp"
#include "elir/random.hpp"

/**
 * \file
 * \brief One-parameter sampling models: Fisher information per information
 * unit, observed information, likelihood terms, predictive draws and
 * conjugate updates.
 *
 * Parameterizations follow the exponential-family table: `mean` is the mean
 * parameter, `natural` the canonical one (logit for binomial, log for
 * Poisson, hazard 1/mu for exponential, precision 1/sigma^2 for chi-square).
 */

namespace elir {

enum class ModelKind { normal, binomial, poisson, exponential, chi_square };
enum class Parameterization { mean, natural };

constexpr std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::normal: return "normal";
    case ModelKind::binomial: return "binomial";
    case ModelKind::poisson: return "poisson";
    case ModelKind::exponential: return "exponential";
    case ModelKind::chi_square: return "chi_square";
  }
  return "unknown";
}

constexpr std::string_view to_string(Parameterization p) noexcept {
  return p == Parameterization::mean ? "mean" : "natural";
}

/// Data of `n_units` information units reduced to the sufficient statistic:
/// sum of y (normal, Poisson), successes (binomial), sum of observations
/// (exponential) or sum of s_d^2 values (chi-square).
struct DataSummary {
  std::size_t n_units = 0;
  double stat = 0.0;
  std::vector<double> raw;
};

class SamplingModel {
 public:
  static SamplingModel normal(double sigma2) {
    detail::require_positive(sigma2, "normal model variance");
    return SamplingModel(ModelKind::normal, Parameterization::mean, sigma2);
  }
  static SamplingModel binomial(Parameterization p = Parameterization::mean) {
    return SamplingModel(ModelKind::binomial, p, 0.0);
  }
  static SamplingModel poisson(Parameterization p = Parameterization::mean) {
    return SamplingModel(ModelKind::poisson, p, 0.0);
  }
  static SamplingModel exponential(Parameterization p = Parameterization::natural) {
    return SamplingModel(ModelKind::exponential, p, 0.0);
  }
  /// One unit is a variance statistic with `d` degrees of freedom.
  static SamplingModel chi_square(double d, Parameterization p = Parameterization::mean) {
    detail::require_positive(d, "chi-square degrees of freedom");
    return SamplingModel(ModelKind::chi_square, p, d);
  }

  [[nodiscard]] ModelKind kind() const noexcept { return kind_; }
  [[nodiscard]] Parameterization parameterization() const noexcept { return param_; }
  [[nodiscard]] double sigma2() const noexcept { return kind_ == ModelKind::normal ? constant_ : kNaN; }
  [[nodiscard]] double dof() const noexcept { return kind_ == ModelKind::chi_square ? constant_ : kNaN; }
  [[nodiscard]] bool natural() const noexcept { return param_ == Parameterization::natural; }

  [[nodiscard]] Interval parameter_space() const noexcept {
    switch (kind_) {
      case ModelKind::normal: return kRealLine;
      case ModelKind::binomial: return natural() ? kRealLine : kUnit;
      case ModelKind::poisson: return natural() ? kRealLine : kPositive;
      case ModelKind::exponential: return kPositive;
      case ModelKind::chi_square: return kPositive;
    }
    return kRealLine;
  }

  /// Observed information of one unit does not depend on the datum.
  [[nodiscard]] bool data_free_information() const noexcept {
    return kind_ == ModelKind::normal || natural();
  }

  [[nodiscard]] bool constant_information() const noexcept { return kind_ == ModelKind::normal; }

  /// Expected Fisher information of one unit.
  [[nodiscard]] double fisher_unit_info(double theta) const {
    check_interior(theta);
    switch (kind_) {
      case ModelKind::normal: return 1.0 / constant_;
      case ModelKind::binomial: {
        if (natural()) {
          return numeric::logistic(theta) * numeric::logistic(-theta);
        }
        return 1.0 / (theta * (1.0 - theta));
      }
      case ModelKind::poisson: return natural() ? std::exp(theta) : 1.0 / theta;
      case ModelKind::exponential: return 1.0 / (theta * theta);
      case ModelKind::chi_square: return constant_ / (2.0 * theta * theta);
    }
    return kNaN;
  }

  /// -d^2/dtheta^2 of the log-likelihood of a single unit `y`.
  [[nodiscard]] double observed_unit_info(double y, double theta) const {
    check_interior(theta);
    check_datum(y);
    switch (kind_) {
      case ModelKind::normal: return 1.0 / constant_;
      case ModelKind::binomial: {
        if (natural()) {
          return numeric::logistic(theta) * numeric::logistic(-theta);
        }
        return y / (theta * theta) + (1.0 - y) / ((1.0 - theta) * (1.0 - theta));
      }
      case ModelKind::poisson: return natural() ? std::exp(theta) : y / (theta * theta);
      case ModelKind::exponential:
        return natural() ? 1.0 / (theta * theta) : -1.0 / (theta * theta) + 2.0 * y / (theta * theta * theta);
      case ModelKind::chi_square:
        return natural() ? constant_ / (2.0 * theta * theta)
                         : -constant_ / (2.0 * theta * theta) + constant_ * y / (theta * theta * theta);
    }
    return kNaN;
  }

  /// E(Y | theta) for one unit.
  [[nodiscard]] double unit_mean(double theta) const {
    switch (kind_) {
      case ModelKind::normal: return theta;
      case ModelKind::binomial: return natural() ? numeric::logistic(theta) : theta;
      case ModelKind::poisson: return natural() ? std::exp(theta) : theta;
      case ModelKind::exponential: return natural() ? 1.0 / theta : theta;
      case ModelKind::chi_square: return natural() ? 1.0 / theta : theta;
    }
    return kNaN;
  }

  /// Log-likelihood of the summary as a function of theta, up to a constant.
  [[nodiscard]] double log_likelihood(const DataSummary& data, double theta) const {
    const auto n = static_cast<double>(data.n_units);
    const double s = data.stat;
    switch (kind_) {
      case ModelKind::normal: return (theta * s - 0.5 * n * theta * theta) / constant_;
      case ModelKind::binomial: {
        if (natural()) {
          return s * theta - n * log1pexp(theta);
        }
        return xlogy(s, theta) + xlogy(n - s, 1.0 - theta);
      }
      case ModelKind::poisson: return natural() ? s * theta - n * std::exp(theta) : xlogy(s, theta) - n * theta;
      case ModelKind::exponential:
        return natural() ? n * std::log(theta) - theta * s : -n * std::log(theta) - s / theta;
      case ModelKind::chi_square: {
        const double d = constant_;
        return natural() ? 0.5 * n * d * std::log(theta) - 0.5 * d * theta * s
                         : -0.5 * n * d * std::log(theta) - 0.5 * d * s / theta;
      }
    }
    return kNaN;
  }

  /// -d^2/dtheta^2 of log_likelihood(data, theta).
  [[nodiscard]] double likelihood_curvature(const DataSummary& data, double theta) const {
    const auto n = static_cast<double>(data.n_units);
    const double s = data.stat;
    switch (kind_) {
      case ModelKind::normal: return n / constant_;
      case ModelKind::binomial: {
        if (natural()) {
          return n * numeric::logistic(theta) * numeric::logistic(-theta);
        }
        return s / (theta * theta) + (n - s) / ((1.0 - theta) * (1.0 - theta));
      }
      case ModelKind::poisson: return natural() ? n * std::exp(theta) : s / (theta * theta);
      case ModelKind::exponential:
        return natural() ? n / (theta * theta) : -n / (theta * theta) + 2.0 * s / (theta * theta * theta);
      case ModelKind::chi_square: {
        const double d = constant_;
        return natural() ? 0.5 * n * d / (theta * theta)
                         : -0.5 * n * d / (theta * theta) + d * s / (theta * theta * theta);
      }
    }
    return kNaN;
  }

  /// Maximum-likelihood estimate and its standard error, clipped to the
  /// parameter space interior; nullopt for empty data.
  struct Estimate {
    double value;
    double std_error;
  };
  [[nodiscard]] std::optional<Estimate> mle(const DataSummary& data) const {
    if (data.n_units == 0) {
      return std::nullopt;
    }
    const auto n = static_cast<double>(data.n_units);
    const double s = data.stat;
    switch (kind_) {
      case ModelKind::normal: return Estimate{s / n, std::sqrt(constant_ / n)};
      case ModelKind::binomial: {
        const double p = std::clamp(s / n, 0.5 / n, 1.0 - 0.5 / n);
        if (natural()) {
          return Estimate{numeric::logit(p), 1.0 / std::sqrt(n * p * (1.0 - p))};
        }
        return Estimate{p, std::sqrt(p * (1.0 - p) / n)};
      }
      case ModelKind::poisson: {
        const double mu = std::max(s, 0.5) / n;
        if (natural()) {
          return Estimate{std::log(mu), 1.0 / std::sqrt(n * mu)};
        }
        return Estimate{mu, std::sqrt(mu / n)};
      }
      case ModelKind::exponential: {
        const double mean = s / n;
        return natural() ? Estimate{1.0 / mean, 1.0 / (mean * std::sqrt(n))} : Estimate{mean, mean / std::sqrt(n)};
      }
      case ModelKind::chi_square: {
        const double v = s / n;
        const double rel = std::sqrt(2.0 / (n * constant_));
        return natural() ? Estimate{1.0 / v, rel / v} : Estimate{v, v * rel};
      }
    }
    return std::nullopt;
  }

  /// Draws one unit at theta.
  [[nodiscard]] double draw_unit(double theta, Engine& rng) const {
    const double m = unit_mean(theta);
    switch (kind_) {
      case ModelKind::normal: return boost::random::normal_distribution<double>(theta, std::sqrt(constant_))(rng);
      case ModelKind::binomial: return boost::random::bernoulli_distribution<double>(m)(rng) ? 1.0 : 0.0;
      case ModelKind::poisson: return static_cast<double>(boost::random::poisson_distribution<long, double>(m)(rng));
      case ModelKind::exponential: return boost::random::gamma_distribution<double>(1.0, 1.0)(rng) * m;
      case ModelKind::chi_square:
        return boost::random::gamma_distribution<double>(0.5 * constant_, 1.0)(rng) * 2.0 * m / constant_;
    }
    return kNaN;
  }

  /// Sufficient statistic of `n` units drawn at theta.
  [[nodiscard]] DataSummary draw_summary(double theta, std::size_t n, Engine& rng) const {
    const double m = unit_mean(theta);
    const auto nd = static_cast<double>(n);
    DataSummary out{n, 0.0, {}};
    switch (kind_) {
      case ModelKind::normal:
        out.stat = nd * theta + std::sqrt(constant_ * nd) * boost::random::normal_distribution<double>(0.0, 1.0)(rng);
        break;
      case ModelKind::binomial:
        out.stat = static_cast<double>(boost::random::binomial_distribution<long, double>(static_cast<long>(n), m)(rng));
        break;
      case ModelKind::poisson:
        out.stat = m * nd > 0.0 ? static_cast<double>(boost::random::poisson_distribution<long, double>(m * nd)(rng)) : 0.0;
        break;
      case ModelKind::exponential: out.stat = boost::random::gamma_distribution<double>(nd, 1.0)(rng) * m; break;
      case ModelKind::chi_square:
        out.stat = boost::random::gamma_distribution<double>(0.5 * constant_ * nd, 1.0)(rng) * 2.0 * m / constant_;
        break;
    }
    return out;
  }

  void check_interior(double theta) const {
    if (!parameter_space().interior(theta)) {
      detail::fail(ErrorCode::out_of_support, "parameter value outside the model's parameter space");
    }
  }

  void check_datum(double y) const {
    const bool ok = [&] {
      switch (kind_) {
        case ModelKind::normal: return std::isfinite(y);
        case ModelKind::binomial: return y == 0.0 || y == 1.0;
        case ModelKind::poisson: return y >= 0.0 && std::floor(y) == y;
        case ModelKind::exponential:
        case ModelKind::chi_square: return y > 0.0 && std::isfinite(y);
      }
      return false;
    }();
    if (!ok) {
      detail::fail(ErrorCode::invalid_datum, "datum " + std::to_string(y) + " is invalid for a " +
                                               std::string(to_string(kind_)) + " model");
    }
  }

  void check_summary(const DataSummary& data) const {
    const auto n = static_cast<double>(data.n_units);
    const double s = data.stat;
    bool ok = std::isfinite(s);
    switch (kind_) {
      case ModelKind::normal: break;
      case ModelKind::binomial: ok = ok && s >= 0.0 && s <= n && std::floor(s) == s; break;
      case ModelKind::poisson: ok = ok && s >= 0.0 && std::floor(s) == s; break;
      case ModelKind::exponential:
      case ModelKind::chi_square: ok = ok && (data.n_units == 0 ? s == 0.0 : s > 0.0); break;
    }
    if (!ok) {
      detail::fail(ErrorCode::invalid_datum, "summary statistic inconsistent with the number of units");
    }
  }

 private:
  SamplingModel(ModelKind kind, Parameterization p, double constant) : kind_(kind), param_(p), constant_(constant) {
    if (kind == ModelKind::normal && p == Parameterization::natural) {
      detail::fail(ErrorCode::invalid_argument, "the normal model is parameterized by its mean only");
    }
  }

  static double xlogy(double x, double y) { return x == 0.0 ? 0.0 : x * std::log(y); }
  static double log1pexp(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

  ModelKind kind_;
  Parameterization param_;
  double constant_;
};

inline double fisher_unit_info(const SamplingModel& m, double theta) { return m.fisher_unit_info(theta); }

inline double observed_unit_info(const SamplingModel& m, double y, double theta) {
  return m.observed_unit_info(y, theta);
}

/// Checks that the prior lives on the model's parameter space.
inline void require_compatible(const Density& prior, const SamplingModel& m) {
  if (!m.parameter_space().contains(prior.support()) || !prior.support().contains(m.parameter_space())) {
    detail::fail(ErrorCode::incompatible_prior, "prior support does not match the parameter space of the " +
                                                    std::string(to_string(m.kind())) + " model (" +
                                                    std::string(to_string(m.parameterization())) + " scale)");
  }
}

/// E over the prior predictive of the observed unit information at theta_bar.
/// Exact when the observed information is data-free; otherwise Monte Carlo:
/// theta ~ prior, Y1 | theta ~ model.
inline double expected_observed_info(const SamplingModel& m, const Density& prior, double theta_bar,
                                     std::size_t n_sim = 1000000, std::uint64_t seed = 1) {
  m.check_interior(theta_bar);
  if (m.data_free_information()) {
    return m.fisher_unit_info(theta_bar);
  }
  detail::require(n_sim >= 1, "n_sim must be at least 1");
  constexpr std::size_t kChunk = 1U << 16U;
  const std::size_t chunks = (n_sim + kChunk - 1) / kChunk;
  std::vector<double> sums(chunks, 0.0);
  for (std::size_t c = 0; c < chunks; ++c) {
    Engine rng = make_engine(seed, {c});
    const std::size_t count = std::min(kChunk, n_sim - c * kChunk);
    std::vector<double> terms(count);
    for (auto& t : terms) {
      const double theta = prior.draw(rng);
      t = m.observed_unit_info(m.draw_unit(theta, rng), theta_bar);
    }
    sums[c] = numeric::pairwise_sum(terms);
  }
  return numeric::pairwise_sum(sums) / static_cast<double>(n_sim);
}

/// Exact version of expected_observed_info. The observed unit information is
/// affine in y for every model here, so it equals the information at the
/// predictive mean of Y, which is `predictive_mean` (the prior mean of
/// E(Y | theta)).
inline double expected_observed_info_at(const SamplingModel& m, double theta_bar, double predictive_mean) {
  if (m.data_free_information()) {
    return m.fisher_unit_info(theta_bar);
  }
  const double y = predictive_mean;
  m.check_interior(theta_bar);
  switch (m.kind()) {
    case ModelKind::binomial:
      return y / (theta_bar * theta_bar) + (1.0 - y) / ((1.0 - theta_bar) * (1.0 - theta_bar));
    case ModelKind::poisson: return y / (theta_bar * theta_bar);
    case ModelKind::exponential:
      return -1.0 / (theta_bar * theta_bar) + 2.0 * y / (theta_bar * theta_bar * theta_bar);
    case ModelKind::chi_square:
      return -m.dof() / (2.0 * theta_bar * theta_bar) + m.dof() * y / (theta_bar * theta_bar * theta_bar);
    case ModelKind::normal: break;
  }
  return m.fisher_unit_info(theta_bar);
}

/// Sufficient statistic of N units at theta, deterministic in `seed`.
inline DataSummary sample_predictive(const SamplingModel& m, double theta, std::size_t n, std::uint64_t seed) {
  detail::require(n >= 1, "predictive sample size must be at least 1");
  if (m.kind() == ModelKind::binomial && !m.natural() && (theta == 0.0 || theta == 1.0)) {
    return {n, theta * static_cast<double>(n), {}};  // degenerate rate
  }
  m.check_interior(theta);
  Engine rng = make_engine(seed);
  return m.draw_summary(theta, n, rng);
}

/// Closed-form posterior of a conjugate (model, prior) pair.
inline Density conjugate_update(const SamplingModel& m, const Density& prior, const DataSummary& data) {
  m.check_summary(data);
  const auto n = static_cast<double>(data.n_units);
  const double s = data.stat;
  const auto not_conjugate = [&]() -> Density {
    detail::fail(ErrorCode::not_conjugate, std::string(prior.family_name()) + " prior is not conjugate to the " +
                                               std::string(to_string(m.kind())) + " model on the " +
                                               std::string(to_string(m.parameterization())) + " scale");
  };
  switch (m.kind()) {
    case ModelKind::normal:
      if (const auto* p = prior.as<Normal>()) {
        const double precision = 1.0 / (p->sd * p->sd) + n / m.sigma2();
        const double mean = (p->mean / (p->sd * p->sd) + s / m.sigma2()) / precision;
        return Density::normal(mean, std::sqrt(1.0 / precision));
      }
      return not_conjugate();
    case ModelKind::binomial:
      if (m.natural()) {
        if (const auto* p = prior.as<LogitBeta>()) return Density::logit_beta(p->a + s, p->b + n - s);
        return not_conjugate();
      }
      if (const auto* p = prior.as<Beta>()) return Density::beta(p->a + s, p->b + n - s);
      if (const auto* mix = prior.as<MixtureDensity>(); mix != nullptr && mix->is_beta()) {
        std::vector<double> log_w;
        std::vector<MixtureComponent> comps;
        for (const auto& c : mix->components()) {
          const auto& b = std::get<Beta>(c.kernel);
          // beta-binomial marginal up to the common binomial coefficient
          log_w.push_back(std::log(c.weight) + detail::log_beta_fn(b.a + s, b.b + n - s) - detail::log_beta_fn(b.a, b.b));
          comps.push_back({0.0, Beta{b.a + s, b.b + n - s}});
        }
        const double norm = numeric::log_sum_exp(log_w);
        double total = 0.0;
        for (std::size_t k = 0; k < comps.size(); ++k) {
          comps[k].weight = std::exp(log_w[k] - norm);
          total += comps[k].weight;
        }
        for (auto& c : comps) {
          c.weight /= total;
        }
        return Density::mixture(std::move(comps));
      }
      return not_conjugate();
    case ModelKind::poisson:
      if (m.natural()) {
        if (const auto* p = prior.as<LogGamma>()) return Density::log_gamma(p->a + s, p->b + n);
        return not_conjugate();
      }
      if (const auto* p = prior.as<Gamma>()) return Density::gamma(p->a + s, p->b + n);
      return not_conjugate();
    case ModelKind::exponential:
      if (m.natural()) {
        if (const auto* p = prior.as<Gamma>()) return Density::gamma(p->a + n, p->b + s);
        if (const auto* p = prior.as<GeneralizedGamma>(); p != nullptr && p->f == 1.0) {
          return Density::gamma(p->a + n, 1.0 / p->s + s);
        }
        return not_conjugate();
      }
      if (const auto* p = prior.as<InverseGamma>()) return Density::inverse_gamma(p->a + n, p->b + s);
      return not_conjugate();
    case ModelKind::chi_square: {
      const double d = m.dof();
      if (m.natural()) {
        if (const auto* p = prior.as<Gamma>()) return Density::gamma(p->a + 0.5 * n * d, p->b + 0.5 * d * s);
        return not_conjugate();
      }
      if (const auto* p = prior.as<InverseGamma>()) return Density::inverse_gamma(p->a + 0.5 * n * d, p->b + 0.5 * d * s);
      return not_conjugate();
    }
  }
  return not_conjugate();
}

// ---------------------------------------------------------------------------
// JSON / ingestion
// ---------------------------------------------------------------------------

inline SamplingModel model_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
    detail::fail(ErrorCode::parse_error, "model needs a string 'kind'");
  }
  const auto kind = j.at("kind").get<std::string>();
  const auto param_name = j.value("parameterization", std::string("mean"));
  if (param_name != "mean" && param_name != "natural") {
    detail::fail(ErrorCode::parse_error, "parameterization must be 'mean' or 'natural'");
  }
  const Parameterization p = param_name == "natural" ? Parameterization::natural : Parameterization::mean;
  try {
    if (kind == "normal") return SamplingModel::normal(detail::json_number(j, "sigma2"));
    if (kind == "binomial") return SamplingModel::binomial(p);
    if (kind == "poisson") return SamplingModel::poisson(p);
    if (kind == "exponential") return SamplingModel::exponential(p);
    if (kind == "chi_square") return SamplingModel::chi_square(detail::json_number(j, "d"), p);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::invalid_argument) {
      detail::fail(ErrorCode::parse_error, e.what());
    }
    throw;
  }
  detail::fail(ErrorCode::parse_error, "unknown model kind '" + kind + "'");
}

inline nlohmann::json to_json(const SamplingModel& m) {
  nlohmann::json j{{"kind", to_string(m.kind())}, {"parameterization", to_string(m.parameterization())}};
  if (m.kind() == ModelKind::normal) j["sigma2"] = m.sigma2();
  if (m.kind() == ModelKind::chi_square) j["d"] = m.dof();
  return j;
}

/// Summary from raw unit values (validated against the model). Censoring is
/// not supported: every exponential value is an observed event time.
inline DataSummary summarize(const SamplingModel& m, std::vector<double> values) {
  double total = 0.0;
  for (const double y : values) {
    m.check_datum(y);
    total += y;
  }
  DataSummary out{values.size(), total, std::move(values)};
  return out;
}

inline DataSummary summary_from_json(const SamplingModel& m, const nlohmann::json& j) {
  if (j.contains("censored")) {
    detail::fail(ErrorCode::parse_error, "censored observations are not supported");
  }
  const double n = detail::json_number(j, "n");
  if (n < 0 || std::floor(n) != n) {
    detail::fail(ErrorCode::parse_error, "'n' must be a non-negative integer");
  }
  DataSummary out{static_cast<std::size_t>(n), detail::json_number(j, "stat"), {}};
  try {
    m.check_summary(out);
  } catch (const Error& e) {
    detail::fail(ErrorCode::parse_error, e.what());
  }
  return out;
}

}  // namespace elir

#endif  // ELIR_MODELS_HPP
