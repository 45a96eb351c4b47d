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

#ifndef ELIR_ESS_HPP
#define ELIR_ESS_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>
#include <nlohmann/json.hpp>

#include "elir/densities.hpp"
#include "elir/error.hpp"
#include "elir/models.hpp"
#include "elir/numeric.hpp"
#include "elir/random.hpp"

/**
 * \file
 * \brief Effective sample size of a one-parameter prior.
 *
 * Five estimators are provided:
 *  - VR:    E{1 / i_F(theta)} / Var(theta)
 *  - PR:    1 / (Var(theta) E{i_F(theta)})
 *  - MTM:   {i(p(mean)) - i(p0(mean))} / E_Y1 i_F(Y1; mean)
 *  - MTM_P: i(p(mode)) / i_F(mode)
 *  - ELIR:  E{i(p(theta)) / i_F(theta)}
 *
 * where i(p) = -d^2/dtheta^2 log p and i_F is the unit Fisher information of
 * the sampling model. ESS values are reals counted in information units.
 */

namespace elir {

enum class EssMethod { vr, pr, mtm, mtm_p, elir };
enum class EssMode { exact, quadrature, monte_carlo };
enum class EssStatus { ok, undefined, diverged };

inline constexpr std::array<EssMethod, 5> kAllMethods{EssMethod::vr, EssMethod::pr, EssMethod::mtm, EssMethod::mtm_p,
                                                      EssMethod::elir};

constexpr std::string_view to_string(EssMethod m) noexcept {
  switch (m) {
    case EssMethod::vr: return "VR";
    case EssMethod::pr: return "PR";
    case EssMethod::mtm: return "MTM";
    case EssMethod::mtm_p: return "MTM_P";
    case EssMethod::elir: return "ELIR";
  }
  return "?";
}

constexpr std::string_view to_string(EssMode m) noexcept {
  switch (m) {
    case EssMode::exact: return "exact";
    case EssMode::quadrature: return "quadrature";
    case EssMode::monte_carlo: return "monte_carlo";
  }
  return "?";
}

constexpr std::string_view to_string(EssStatus s) noexcept {
  switch (s) {
    case EssStatus::ok: return "ok";
    case EssStatus::undefined: return "undefined";
    case EssStatus::diverged: return "diverged";
  }
  return "?";
}

inline EssMethod method_from_string(std::string_view name) {
  for (const auto m : kAllMethods) {
    if (name == to_string(m)) {
      return m;
    }
  }
  if (name == "MTM.P" || name == "MTMP") {
    return EssMethod::mtm_p;
  }
  detail::fail(ErrorCode::parse_error, "unknown ESS method '" + std::string(name) + "'");
}

struct EssEstimate {
  EssMethod method = EssMethod::elir;
  double value = kNaN;
  std::optional<double> std_error;
  EssMode mode = EssMode::exact;
  EssStatus status = EssStatus::ok;
  std::string note;

  [[nodiscard]] bool ok() const noexcept { return status == EssStatus::ok; }
};

inline nlohmann::json to_json(const EssEstimate& e) {
  nlohmann::json j{{"method", to_string(e.method)},
                   {"mode", to_string(e.mode)},
                   {"status", to_string(e.status)}};
  j["value"] = e.ok() ? nlohmann::json(e.value) : nlohmann::json(nullptr);
  j["se"] = e.std_error ? nlohmann::json(*e.std_error) : nlohmann::json(nullptr);
  if (!e.note.empty()) {
    j["note"] = e.note;
  }
  return j;
}

/// Reference prior p0 for MTM.
struct EpsilonPrior {
  enum class Strategy { analytic_limit, mean_matched_inflated, explicit_density };

  Strategy strategy = Strategy::analytic_limit;
  double variance_factor = 1e4;
  std::optional<Density> density;

  static EpsilonPrior analytic_limit() { return {}; }
  static EpsilonPrior inflated(double variance_factor = 1e4) {
    detail::require(variance_factor > 1.0, "variance_factor must exceed 1");
    return {Strategy::mean_matched_inflated, variance_factor, std::nullopt};
  }
  static EpsilonPrior explicit_prior(Density d) { return {Strategy::explicit_density, 1e4, std::move(d)}; }
};

struct EssOptions {
  /// Forces a computation path; empty selects exact, then quadrature, with
  /// Monte Carlo for mixture priors (ELIR only).
  std::optional<EssMode> mode;
  std::size_t n_sim = 1000000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  EpsilonPrior epsilon;
};

// ---------------------------------------------------------------------------
// Closed forms
// ---------------------------------------------------------------------------

/// Closed-form ESS values of a known (prior family, model) pair. Methods
/// outside the pair's validity range carry status undefined or diverged.
struct ClosedFormEss {
  std::string pair;
  std::array<std::optional<EssEstimate>, 5> entries;

  [[nodiscard]] const std::optional<EssEstimate>& get(EssMethod m) const {
    return entries[static_cast<std::size_t>(m)];
  }
};

namespace detail {

inline EssEstimate exact_value(EssMethod m, double v) { return {m, v, std::nullopt, EssMode::exact, EssStatus::ok, {}}; }

inline EssEstimate exact_status(EssMethod m, EssStatus s, std::string note) {
  return {m, kNaN, std::nullopt, EssMode::exact, s, std::move(note)};
}

/// MTM's reference-prior information at theta_bar in the analytic limit.
/// The limit is that of a same-mean prior whose variance grows without bound
/// within the natural family of the parameter space: normal on the real
/// line, gamma on (0, inf), beta on (0, 1); log-normal for the Poisson mean.
inline double epsilon_limit_information(const SamplingModel& m, double theta_bar) {
  const Interval space = m.parameter_space();
  if (space.lo == -kInf) {
    return 0.0;
  }
  if (space.hi == 1.0) {
    return -1.0 / (theta_bar * theta_bar) - 1.0 / ((1.0 - theta_bar) * (1.0 - theta_bar));
  }
  if (m.kind() == ModelKind::poisson) {
    return -1.5 / (theta_bar * theta_bar);
  }
  return -1.0 / (theta_bar * theta_bar);
}

inline Density inflated_epsilon_prior(const SamplingModel& m, double mean, double variance, double factor) {
  const double v = factor * variance;
  const Interval space = m.parameter_space();
  if (space.lo == -kInf) {
    return Density::normal(mean, std::sqrt(v));
  }
  if (space.hi == 1.0) {
    // concentration a + b, floored so the beta stays proper
    const double n = std::max(mean * (1.0 - mean) / v - 1.0, 1e-8);
    return Density::beta(n * mean, n * (1.0 - mean));
  }
  if (m.kind() == ModelKind::poisson) {
    const double s2 = std::log1p(v / (mean * mean));
    return Density::log_normal(std::log(mean) - 0.5 * s2, std::sqrt(s2));
  }
  return Density::gamma(mean * mean / v, mean / v);
}

/// Expected unit observed information at theta_bar under a predictive whose
/// unit mean is the prior mean of theta (mean parameterization).
inline double predictive_unit_info(const SamplingModel& m, double theta_bar) {
  return expected_observed_info_at(m, theta_bar, m.natural() ? kNaN : theta_bar);
}

inline std::optional<ClosedFormEss> closed_form_lookup(const Density& prior, const SamplingModel& m) {
  using M = EssMethod;
  ClosedFormEss out;
  auto set = [&out](EssEstimate e) { out.entries[static_cast<std::size_t>(e.method)] = std::move(e); };
  auto val = [&](M method, double v) { set(exact_value(method, v)); };
  auto undefined = [&](M method, const char* why) { set(exact_status(method, EssStatus::undefined, why)); };
  auto diverged = [&](M method, const char* why) { set(exact_status(method, EssStatus::diverged, why)); };
  const bool natural = m.natural();

  switch (m.kind()) {
    case ModelKind::normal: {
      const double s2 = m.sigma2();
      if (const auto* p = prior.as<Normal>()) {
        out.pair = "normal/normal";
        const double n0 = s2 / (p->sd * p->sd);
        for (const auto method : kAllMethods) val(method, n0);
        return out;
      }
      if (const auto* p = prior.as<StudentT>()) {
        out.pair = "normal/student_t";
        const double ratio = s2 / (p->scale * p->scale);
        const double df = p->df;
        if (df > 2.0) {
          val(M::vr, ratio * (df - 2.0) / df);
          val(M::pr, ratio * (df - 2.0) / df);
        } else {
          undefined(M::vr, "variance requires df > 2");
          undefined(M::pr, "variance requires df > 2");
        }
        if (df > 1.0) {
          val(M::mtm, ratio * (df + 1.0) / df);
        } else {
          undefined(M::mtm, "mean requires df > 1");
        }
        val(M::mtm_p, ratio * (df + 1.0) / df);
        val(M::elir, ratio * (df + 1.0) / (df + 3.0));
        return out;
      }
      return std::nullopt;
    }
    case ModelKind::binomial: {
      if (natural) {
        if (const auto* p = prior.as<LogitBeta>()) {
          out.pair = "binomial/logit_beta";
          for (const auto method : {M::mtm, M::mtm_p, M::elir}) val(method, p->a + p->b);
          return out;
        }
        return std::nullopt;
      }
      const auto* p = prior.as<Beta>();
      if (p == nullptr) return std::nullopt;
      out.pair = "binomial/beta";
      const double a = p->a;
      const double b = p->b;
      const double n = a + b;
      val(M::vr, n);
      if (a > 1.0 && b > 1.0) {
        val(M::pr, n * n * (n + 1.0) * (a - 1.0) * (b - 1.0) / (a * b * (n - 1.0) * (n - 2.0)));
        val(M::mtm_p, n - 2.0);
      } else {
        undefined(M::pr, "E{i_F} requires a > 1 and b > 1");
        undefined(M::mtm_p, "no interior mode unless a > 1 and b > 1");
      }
      val(M::mtm, n);
      if (a < 1.0 || b < 1.0) {
        diverged(M::elir, "expectation does not exist for min(a, b) < 1");
      } else if (a == 1.0 && b == 1.0) {
        val(M::elir, 0.0);
      } else if (a == 1.0 || b == 1.0) {
        val(M::elir, 1.0);
      } else {
        val(M::elir, n);
      }
      return out;
    }
    case ModelKind::poisson: {
      if (natural) {
        if (const auto* p = prior.as<LogGamma>()) {
          out.pair = "poisson/log_gamma";
          for (const auto method : {M::mtm, M::mtm_p, M::elir}) val(method, p->b);
          return out;
        }
        return std::nullopt;
      }
      const auto* p = prior.as<Gamma>();
      if (p == nullptr) return std::nullopt;
      out.pair = "poisson/gamma";
      const double a = p->a;
      const double b = p->b;
      val(M::vr, b);
      if (a > 1.0) {
        val(M::pr, b * (a - 1.0) / a);
        val(M::mtm_p, b);
      } else {
        undefined(M::pr, "E{i_F} requires a > 1");
        undefined(M::mtm_p, "no interior mode unless a > 1");
      }
      val(M::mtm, b * (1.0 + 0.5 / a));
      if (a > 1.0) {
        val(M::elir, b);
      } else if (a == 1.0) {
        val(M::elir, 0.0);
      } else {
        diverged(M::elir, "expectation does not exist for a < 1");
      }
      return out;
    }
    case ModelKind::exponential:
    case ModelKind::chi_square: {
      // chi-square information is d/2 times the exponential one
      const double scale = m.kind() == ModelKind::chi_square ? 2.0 / m.dof() : 1.0;
      const std::string model_name(to_string(m.kind()));
      if (!natural) {
        const auto* p = prior.as<InverseGamma>();
        if (p == nullptr) return std::nullopt;
        out.pair = model_name + "/inverse_gamma";
        const double a = p->a;
        if (a > 2.0) {
          val(M::vr, scale * (a - 1.0));
          val(M::pr, scale * (a - 1.0) * (a - 1.0) * (a - 2.0) / (a * (a + 1.0)));
        } else {
          undefined(M::vr, "variance requires a > 2");
          undefined(M::pr, "variance requires a > 2");
        }
        if (a > 1.0) {
          val(M::mtm, scale * (a - 2.0));
        } else {
          undefined(M::mtm, "mean requires a > 1");
        }
        val(M::mtm_p, scale * (a + 1.0));
        if (a > 1.0) {
          val(M::elir, scale * (a - 1.0));
        } else {
          diverged(M::elir, "expectation does not exist for a <= 1");
        }
        return out;
      }
      double a = 0.0;
      double s = 0.0;
      double f = 1.0;
      if (const auto* p = prior.as<Gamma>()) {
        out.pair = model_name + "/gamma";
        a = p->a;
        s = 1.0 / p->b;
      } else if (const auto* p = prior.as<GeneralizedGamma>()) {
        out.pair = model_name + "/generalized_gamma";
        a = p->a;
        s = p->s;
        f = p->f;
      } else {
        return std::nullopt;
      }
      const GeneralizedGamma gg{a, s, f};
      const double m1 = *gg.raw_moment(1.0);
      const double m2 = *gg.raw_moment(2.0);
      const double var = m2 - m1 * m1;
      val(M::vr, scale * m2 / var);
      if (a > 2.0) {
        val(M::pr, scale / (var * *gg.raw_moment(-2.0)));
      } else {
        undefined(M::pr, "E{i_F} requires a > 2");
      }
      const double ratio = std::exp(boost::math::lgamma((a + 1.0) / f) - boost::math::lgamma(a / f));
      val(M::mtm, scale * (a + f * (f - 1.0) * std::pow(ratio, f)));
      if (a > 1.0) {
        val(M::mtm_p, scale * (a * f - f));
      } else {
        undefined(M::mtm_p, "no interior mode unless a > 1");
      }
      val(M::elir, scale * (a * f - 1.0));
      return out;
    }
  }
  return std::nullopt;
}

/// Expectations over the central 99%, 99.9%, 99.99%, then with tails of
/// 1e-7, 1e-10 and 1e-13 cut, then over the whole support; the last is the
/// reported value. A slowly convergent tail still shrinks geometrically over
/// the log-spaced deep trims, a divergent one does not.
struct TrimmedExpectation {
  std::array<double, 7> levels{};
  bool diverged = false;
};

template <class G>
TrimmedExpectation trimmed_expectation(const Density& d, G&& g) {
  constexpr std::array<double, 7> kTails{5e-3, 5e-4, 5e-5, 1e-7, 1e-10, 1e-13, 0.0};
  TrimmedExpectation out;
  const auto levels = trimmed_expectations(d, g, kTails);
  for (std::size_t i = 0; i < kTails.size(); ++i) {
    out.levels[i] = levels[i];
    if (!std::isfinite(out.levels[i])) {
      out.diverged = true;
      return out;
    }
  }
  const auto& l = out.levels;
  const double size = std::max(std::abs(l[6]), std::abs(l[5]));
  const double last = std::abs(l[6] - l[5]);
  const double before = std::abs(l[4] - l[3]);
  const double deep = std::abs(l[5] - l[4]);
  if (last > 1e-9 && last > 0.05 * size && deep >= 0.9 * before) {
    out.diverged = true;
  }
  return out;
}

/// Quadrature expectation that throws Diverged when the trimmed sequence
/// does not settle.
template <class G>
double checked_expectation(const Density& d, G&& g, const char* what) {
  const auto t = trimmed_expectation(d, std::forward<G>(g));
  if (t.diverged) {
    detail::fail(ErrorCode::diverged, std::string(what) + " does not settle under expanding quantile trims");
  }
  return t.levels.back();
}

/// Prior mean and variance; throws MomentUndefined(2) when the variance is
/// missing.
inline Moments require_moments(const Density& prior) { return prior.moments(); }

inline bool forced_numeric(const EssOptions& o) {
  return o.mode.has_value() && *o.mode != EssMode::exact;
}

inline std::optional<EssEstimate> closed_form_entry(const Density& prior, const SamplingModel& m, EssMethod method,
                                                    const EssOptions& o) {
  if (forced_numeric(o)) {
    return std::nullopt;
  }
  const auto cf = closed_form_lookup(prior, m);
  if (!cf) {
    if (o.mode == EssMode::exact) {
      detail::fail(ErrorCode::unknown_pair, "no closed form for a " + std::string(prior.family_name()) + " prior and " +
                                                std::string(to_string(m.kind())) + " model on the " +
                                                std::string(to_string(m.parameterization())) + " scale");
    }
    return std::nullopt;
  }
  return cf->get(method);
}

/// Converts a closed-form entry whose status is not ok into the matching
/// typed error.
inline EssEstimate raise_status(const EssEstimate& e) {
  if (e.ok()) {
    return e;
  }
  if (e.status == EssStatus::diverged) {
    detail::fail(ErrorCode::diverged, e.note);
  }
  switch (e.method) {
    case EssMethod::mtm: detail::fail(ErrorCode::mean_undefined, e.note);
    case EssMethod::mtm_p: detail::fail(ErrorCode::mode_undefined, e.note);
    default: detail::fail(ErrorCode::moment_undefined, e.note, 2);
  }
}

}  // namespace detail

/// Closed-form ESS values for a registered pair; UnknownPair otherwise.
inline ClosedFormEss ess_closed_form(const Density& prior, const SamplingModel& m) {
  require_compatible(prior, m);
  auto cf = detail::closed_form_lookup(prior, m);
  if (!cf) {
    detail::fail(ErrorCode::unknown_pair, "no closed form for a " + std::string(prior.family_name()) + " prior and " +
                                              std::string(to_string(m.kind())) + " model on the " +
                                              std::string(to_string(m.parameterization())) + " scale");
  }
  return *cf;
}

/// Local information ratio r(theta) = i(p(theta)) / i_F(theta).
inline double information_ratio(const Density& prior, const SamplingModel& m, double theta) {
  return prior.information(theta) / m.fisher_unit_info(theta);
}

// ---------------------------------------------------------------------------
// Estimators
// ---------------------------------------------------------------------------

inline EssEstimate ess_vr(const Density& prior, const SamplingModel& m, const EssOptions& o = {}) {
  require_compatible(prior, m);
  if (auto e = detail::closed_form_entry(prior, m, EssMethod::vr, o)) {
    return detail::raise_status(*e);
  }
  const Moments mom = detail::require_moments(prior);
  const double second = mom.variance + mom.mean * mom.mean;
  double inverse_info = kNaN;
  EssMode mode = EssMode::exact;
  const bool analytic = !detail::forced_numeric(o);
  switch (m.kind()) {
    case ModelKind::normal: inverse_info = m.sigma2(); break;
    case ModelKind::binomial:
      if (!m.natural() && analytic) inverse_info = mom.mean - second;
      break;
    case ModelKind::poisson:
      if (!m.natural() && analytic) inverse_info = mom.mean;
      break;
    case ModelKind::exponential:
      if (analytic) inverse_info = second;
      break;
    case ModelKind::chi_square:
      if (analytic) inverse_info = 2.0 * second / m.dof();
      break;
  }
  if (std::isnan(inverse_info)) {
    mode = EssMode::quadrature;
    inverse_info = detail::checked_expectation(prior, [&](double t) { return 1.0 / m.fisher_unit_info(t); },
                                               "E{1/i_F}");
  }
  return {EssMethod::vr, inverse_info / mom.variance, std::nullopt, mode, EssStatus::ok, {}};
}

inline EssEstimate ess_pr(const Density& prior, const SamplingModel& m, const EssOptions& o = {}) {
  require_compatible(prior, m);
  if (auto e = detail::closed_form_entry(prior, m, EssMethod::pr, o)) {
    return detail::raise_status(*e);
  }
  const Moments mom = detail::require_moments(prior);
  double mean_info = kNaN;
  EssMode mode = EssMode::exact;
  if (m.constant_information()) {
    return {EssMethod::pr, m.sigma2() / mom.variance, std::nullopt, mode, EssStatus::ok, {}};
  } else {
    mode = EssMode::quadrature;
    try {
      mean_info = detail::checked_expectation(prior, [&](double t) { return m.fisher_unit_info(t); }, "E{i_F}");
    } catch (const Error& e) {
      if (e.code() == ErrorCode::diverged) {
        detail::fail(ErrorCode::moment_undefined, "prior expectation of the Fisher information does not exist", -2);
      }
      throw;
    }
  }
  return {EssMethod::pr, 1.0 / (mom.variance * mean_info), std::nullopt, mode, EssStatus::ok, {}};
}

inline EssEstimate ess_mtm(const Density& prior, const SamplingModel& m, const EssOptions& o = {}) {
  require_compatible(prior, m);
  const double theta_bar = prior.mean();
  if (!m.parameter_space().interior(theta_bar)) {
    detail::fail(ErrorCode::mean_undefined, "prior mean lies on the boundary of the parameter space");
  }
  const double info = prior.information(theta_bar);
  double info0 = 0.0;
  switch (o.epsilon.strategy) {
    case EpsilonPrior::Strategy::analytic_limit: info0 = detail::epsilon_limit_information(m, theta_bar); break;
    case EpsilonPrior::Strategy::mean_matched_inflated: {
      const Moments mom = detail::require_moments(prior);
      info0 = detail::inflated_epsilon_prior(m, theta_bar, mom.variance, o.epsilon.variance_factor).information(theta_bar);
      break;
    }
    case EpsilonPrior::Strategy::explicit_density:
      detail::require(o.epsilon.density.has_value(), "explicit epsilon prior needs a density");
      info0 = o.epsilon.density->information(theta_bar);
      break;
  }
  const double value = (info - info0) / detail::predictive_unit_info(m, theta_bar);
  return {EssMethod::mtm, value, std::nullopt, EssMode::exact, EssStatus::ok, {}};
}

inline EssEstimate ess_mtm_p(const Density& prior, const SamplingModel& m, const EssOptions& /*o*/ = {}) {
  require_compatible(prior, m);
  const double mode = prior.mode();
  if (!m.parameter_space().interior(mode)) {
    detail::fail(ErrorCode::mode_undefined, "prior mode lies on the boundary of the parameter space");
  }
  return {EssMethod::mtm_p, information_ratio(prior, m, mode), std::nullopt, EssMode::exact, EssStatus::ok, {}};
}

namespace detail {

/// Monte Carlo mean of r(theta) over prior draws in fixed chunks so the
/// result does not depend on the thread count.
inline EssEstimate elir_monte_carlo(const Density& prior, const SamplingModel& m, std::size_t n_sim,
                                    std::uint64_t seed, unsigned threads) {
  detail::require(n_sim >= 2, "n_sim must be at least 2");
  constexpr std::size_t kChunk = 1U << 16U;
  const std::size_t chunks = (n_sim + kChunk - 1) / kChunk;
  std::vector<double> sums(chunks, 0.0);
  std::vector<double> squares(chunks, 0.0);
  std::vector<int> bad(chunks, 0);
  const MixtureDensity* mix = prior.as<MixtureDensity>();
  parallel_for(chunks, threads, [&](std::size_t c) {
    Engine rng = make_engine(seed, {c});
    const std::size_t count = std::min(kChunk, n_sim - c * kChunk);
    std::vector<double> values(count);
    for (auto& v : values) {
      const double theta = prior.draw(rng);
      if (!m.parameter_space().interior(theta)) {
        bad[c] = 1;  // draw rounded onto the boundary of (0, 1)
        v = 0.0;
        continue;
      }
      const double info = mix != nullptr ? mix->evaluate(theta).prior_info : prior.information(theta);
      v = info / m.fisher_unit_info(theta);
    }
    sums[c] = numeric::pairwise_sum(values);
    for (auto& v : values) {
      v *= v;
    }
    squares[c] = numeric::pairwise_sum(values);
  });
  for (const int flag : bad) {
    if (flag != 0) {
      detail::fail(ErrorCode::diverged, "prior draws reach the boundary of the parameter space");
    }
  }
  const auto n = static_cast<double>(n_sim);
  const double mean = numeric::pairwise_sum(sums) / n;
  const double var = std::max(0.0, (numeric::pairwise_sum(squares) - n * mean * mean) / (n - 1.0));
  if (!std::isfinite(mean)) {
    detail::fail(ErrorCode::diverged, "information ratio is not finite over prior draws");
  }
  return {EssMethod::elir, mean, std::sqrt(var / n), EssMode::monte_carlo, EssStatus::ok, {}};
}

}  // namespace detail

inline EssEstimate ess_elir(const Density& prior, const SamplingModel& m, const EssOptions& o = {}) {
  require_compatible(prior, m);
  if (auto e = detail::closed_form_entry(prior, m, EssMethod::elir, o)) {
    return detail::raise_status(*e);
  }
  const EssMode mode = o.mode.value_or(prior.is_mixture() ? EssMode::monte_carlo : EssMode::quadrature);
  const auto ratio = [&](double t) { return information_ratio(prior, m, t); };
  const auto trims = detail::trimmed_expectation(prior, ratio);
  if (trims.diverged) {
    detail::fail(ErrorCode::diverged, "expected information ratio does not settle under expanding quantile trims");
  }
  if (mode == EssMode::monte_carlo) {
    return detail::elir_monte_carlo(prior, m, o.n_sim, o.seed, o.threads);
  }
  return {EssMethod::elir, trims.levels.back(), std::nullopt, EssMode::quadrature, EssStatus::ok, {}};
}

/// Runs one estimator and maps undefined or divergent cases onto a status
/// instead of an exception.
inline EssEstimate compute(EssMethod method, const Density& prior, const SamplingModel& m, const EssOptions& o = {}) {
  try {
    switch (method) {
      case EssMethod::vr: return ess_vr(prior, m, o);
      case EssMethod::pr: return ess_pr(prior, m, o);
      case EssMethod::mtm: return ess_mtm(prior, m, o);
      case EssMethod::mtm_p: return ess_mtm_p(prior, m, o);
      case EssMethod::elir: return ess_elir(prior, m, o);
    }
  } catch (const Error& e) {
    switch (e.code()) {
      case ErrorCode::moment_undefined:
      case ErrorCode::mean_undefined:
      case ErrorCode::mode_undefined:
        return {method, kNaN, std::nullopt, o.mode.value_or(EssMode::exact), EssStatus::undefined, e.what()};
      case ErrorCode::diverged:
        return {method, kNaN, std::nullopt, o.mode.value_or(EssMode::exact), EssStatus::diverged, e.what()};
      default: throw;
    }
  }
  return {};
}

inline std::vector<EssEstimate> compute_all(const Density& prior, const SamplingModel& m, const EssOptions& o = {}) {
  std::vector<EssEstimate> out;
  for (const auto method : kAllMethods) {
    out.push_back(compute(method, prior, m, o));
  }
  return out;
}

}  // namespace elir

#endif  // ELIR_ESS_HPP
