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

#ifndef ELIR_HIERARCHY_HPP
#define ELIR_HIERARCHY_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <nlohmann/json.hpp>

#include "elir/densities.hpp"
#include "elir/error.hpp"
#include "elir/ess.hpp"
#include "elir/mixfit.hpp"
#include "elir/models.hpp"
#include "elir/numeric.hpp"
#include "elir/random.hpp"

/**
 * \file
 * \brief Binomial random-effects models on the log-odds scale.
 *
 * theta_j ~ w N(mu, tau^2) + (1 - w) N(m_r, s_r^2), r_j ~ Bin(n_j, logistic(theta_j)).
 * With w = 1 this is the exchangeable model whose predictive for a new
 * trial is the MAP prior. Sampling is adaptive random-walk Metropolis within
 * Gibbs, with extra moves that shift or rescale all exchangeable theta_j
 * together so that small tau does not trap the chain.
 */

namespace elir {

struct TrialRecord {
  std::string label;
  long responders = 0;
  long size = 0;

  void validate() const {
    if (size < 1 || responders < 0 || responders > size) {
      detail::fail(ErrorCode::invalid_datum, "trial '" + label + "' needs 0 <= r <= n and n >= 1");
    }
  }
};

struct HierModelSpec {
  Density mu_prior = Density::normal(0.0, 10.0);
  Density tau_prior = Density::half_normal(1.0);
  /// Prior probability that a subgroup is exchangeable.
  double weight = 1.0;
  Normal robust{0.0, 2.0};

  static HierModelSpec map_default() { return {}; }
  static HierModelSpec subgroup_default(double w = 1.0) {
    HierModelSpec s;
    s.mu_prior = Density::normal(0.0, 2.0);
    s.weight = w;
    return s;
  }

  void validate() const {
    detail::require(weight > 0.0 && weight <= 1.0, "exchangeability weight must be in (0, 1]");
    detail::require(mu_prior.as<Normal>() != nullptr, "mu prior must be normal");
    detail::require(tau_prior.support().lo >= 0.0, "tau prior must live on the positive half-line");
  }
};

struct McmcConfig {
  std::size_t chains = 4;
  std::size_t iterations = 10000;
  std::size_t warmup = 5000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  double target_accept = 0.3;
  double max_rhat = 1.05;
  /// Throw DivergentChains when a split-Rhat exceeds `max_rhat`.
  bool check_convergence = true;

  void validate() const {
    detail::require(chains >= 2, "at least two chains are needed for diagnostics");
    detail::require(iterations >= 1000, "at least 1000 iterations are required");
    detail::require(target_accept > 0.0 && target_accept < 1.0, "target acceptance must be in (0, 1)");
  }
};

/// Split-Rhat with each chain cut in half.
inline double split_rhat(const std::vector<std::vector<double>>& chains) {
  std::vector<std::span<const double>> halves;
  for (const auto& c : chains) {
    const std::size_t h = c.size() / 2;
    halves.emplace_back(c.data(), h);
    halves.emplace_back(c.data() + c.size() - h, h);
  }
  const auto n = static_cast<double>(halves.front().size());
  std::vector<double> means;
  std::vector<double> vars;
  for (const auto& h : halves) {
    const auto s = numeric::sample_mean(h);
    means.push_back(s.mean);
    vars.push_back(s.std_error * s.std_error * n);
  }
  const double w = numeric::pairwise_sum(vars) / static_cast<double>(vars.size());
  const auto between = numeric::sample_mean(means);
  const double b_over_n = between.std_error * between.std_error * static_cast<double>(means.size());
  if (!(w > 0.0)) {
    return b_over_n > 0.0 ? kInf : 1.0;
  }
  const double var_plus = (n - 1.0) / n * w + b_over_n;
  return std::sqrt(var_plus / w);
}

/// Multi-chain effective sample size with Geyer's initial monotone sequence.
inline double effective_sample_size(const std::vector<std::vector<double>>& chains) {
  const std::size_t m = chains.size();
  const std::size_t n = chains.front().size();
  std::vector<double> means(m);
  std::vector<double> vars(m);
  for (std::size_t c = 0; c < m; ++c) {
    const auto s = numeric::sample_mean(chains[c]);
    means[c] = s.mean;
    vars[c] = s.std_error * s.std_error * static_cast<double>(n);
  }
  const double w = numeric::pairwise_sum(vars) / static_cast<double>(m);
  const double b_over_n = m > 1 ? numeric::sample_mean(means).std_error * numeric::sample_mean(means).std_error *
                                      static_cast<double>(m)
                                : 0.0;
  const double var_plus = (static_cast<double>(n) - 1.0) / static_cast<double>(n) * w + b_over_n;
  if (!(var_plus > 0.0)) {
    return static_cast<double>(m * n);
  }
  const auto rho = [&](std::size_t lag) {
    double acc = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      double s = 0.0;
      for (std::size_t i = 0; i + lag < n; ++i) {
        s += (chains[c][i] - means[c]) * (chains[c][i + lag] - means[c]);
      }
      acc += s / static_cast<double>(n);
    }
    return 1.0 - (w - acc / static_cast<double>(m)) / var_plus;
  };
  double tau = -1.0;
  double prev_pair = kInf;
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    double pair = rho(2 * k) + rho(2 * k + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);
    tau += 2.0 * pair;
    prev_pair = pair;
  }
  return static_cast<double>(m * n) / std::max(tau, 1.0 / std::log10(static_cast<double>(m * n)));
}

struct ParameterDiagnostics {
  std::string name;
  double mean = kNaN;
  double sd = kNaN;
  double rhat = kNaN;
  double ess = kNaN;
};

struct HierarchyFit {
  std::vector<TrialRecord> trials;
  double weight = 1.0;
  /// Post-warmup draws pooled over chains, chain-major.
  std::vector<double> mu;
  std::vector<double> tau;
  std::vector<std::vector<double>> theta;
  /// Log-odds of a new exchangeable trial, one per draw.
  std::vector<double> theta_star;
  /// Posterior probability that each subgroup is exchangeable.
  std::vector<double> exchangeable_probability;
  std::vector<ParameterDiagnostics> diagnostics;
  std::vector<double> acceptance;

  [[nodiscard]] std::vector<double> pi_star() const { return logistic_all(theta_star); }
  [[nodiscard]] std::vector<double> pi(std::size_t j) const { return logistic_all(theta.at(j)); }
  [[nodiscard]] double max_rhat() const {
    double r = 0.0;
    for (const auto& d : diagnostics) r = std::max(r, d.rhat);
    return r;
  }
  [[nodiscard]] double min_ess() const {
    double e = kInf;
    for (const auto& d : diagnostics) e = std::min(e, d.ess);
    return e;
  }

 private:
  static std::vector<double> logistic_all(const std::vector<double>& x) {
    std::vector<double> out(x.size());
    std::transform(x.begin(), x.end(), out.begin(), numeric::logistic);
    return out;
  }
};

namespace detail {

inline double log_normal_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * boost::math::constants::pi<double>());
}

/// log of logistic(theta)^r (1 - logistic(theta))^(n - r)
inline double binomial_logit_loglik(double theta, double r, double n) {
  const double softplus = theta > 0.0 ? theta + std::log1p(std::exp(-theta)) : std::log1p(std::exp(theta));
  return r * theta - n * softplus;
}

struct ChainDraws {
  std::vector<double> mu;
  std::vector<double> tau;
  std::vector<std::vector<double>> theta;
  std::vector<double> theta_star;
  std::vector<double> z_sum;
  std::vector<double> accepted;
  std::vector<double> proposed;
};

class HierarchySampler {
 public:
  HierarchySampler(const std::vector<TrialRecord>& trials, const HierModelSpec& spec)
      : spec_(spec), j_(trials.size()) {
    for (const auto& t : trials) {
      r_.push_back(static_cast<double>(t.responders));
      n_.push_back(static_cast<double>(t.size));
    }
    const auto& mp = *spec_.mu_prior.as<Normal>();
    mu_mean_ = mp.mean;
    mu_sd_ = mp.sd;
    log_w_ = std::log(spec_.weight);
    log_1mw_ = spec_.weight < 1.0 ? std::log1p(-spec_.weight) : -kInf;
  }

  ChainDraws run(const McmcConfig& cfg, std::size_t chain) const {
    Engine rng = make_engine(cfg.seed, {static_cast<std::uint64_t>(chain)});
    boost::random::normal_distribution<double> gauss(0.0, 1.0);
    boost::random::uniform_01<double> unif;

    // proposal slots: theta_1..J, log tau, joint rescale, joint shift
    const std::size_t slots = j_ + 3;
    std::vector<double> log_scale(slots, std::log(0.5));
    std::vector<double> theta(j_);
    std::vector<bool> z(j_, true);
    for (std::size_t j = 0; j < j_; ++j) {
      theta[j] = numeric::logit((r_[j] + 0.5) / (n_[j] + 1.0)) + 0.3 * gauss(rng);
    }
    double mu = numeric::pairwise_sum(theta) / static_cast<double>(j_) + 0.3 * gauss(rng);
    double log_tau = std::log(0.3) + 0.5 * gauss(rng);

    ChainDraws out;
    out.theta.assign(j_, {});
    out.z_sum.assign(j_, 0.0);
    out.accepted.assign(slots, 0.0);
    out.proposed.assign(slots, 0.0);
    out.mu.reserve(cfg.iterations);
    out.tau.reserve(cfg.iterations);
    out.theta_star.reserve(cfg.iterations);
    for (auto& t : out.theta) t.reserve(cfg.iterations);

    const std::size_t total = cfg.warmup + cfg.iterations;
    for (std::size_t it = 0; it < total; ++it) {
      const bool warm = it < cfg.warmup;
      const double gain = std::pow(static_cast<double>(it + 1), -0.6);
      const auto metropolis = [&](std::size_t slot, double log_ratio) {
        const double a = log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
        const bool accept = unif(rng) < a;
        if (warm) {
          log_scale[slot] += gain * (a - cfg.target_accept);
        } else {
          out.proposed[slot] += 1.0;
          out.accepted[slot] += accept ? 1.0 : 0.0;
        }
        return accept;
      };
      double tau = std::exp(log_tau);

      // subgroup log-odds, with the indicator integrated out, then the indicator
      for (std::size_t j = 0; j < j_; ++j) {
        const double prop = theta[j] + std::exp(log_scale[j]) * gauss(rng);
        const double lr = binomial_logit_loglik(prop, r_[j], n_[j]) + log_prior_theta(prop, mu, tau) -
                          binomial_logit_loglik(theta[j], r_[j], n_[j]) - log_prior_theta(theta[j], mu, tau);
        if (metropolis(j, lr)) theta[j] = prop;
        if (spec_.weight < 1.0) {
          const double l1 = log_w_ + log_normal_pdf(theta[j], mu, tau);
          const double l0 = log_1mw_ + log_normal_pdf(theta[j], spec_.robust.mean, spec_.robust.sd);
          z[j] = unif(rng) < 1.0 / (1.0 + std::exp(l0 - l1));
        }
      }

      // mu given exchangeable theta_j
      {
        double sum = 0.0;
        double k = 0.0;
        for (std::size_t j = 0; j < j_; ++j) {
          if (z[j]) {
            sum += theta[j];
            k += 1.0;
          }
        }
        const double precision = 1.0 / (mu_sd_ * mu_sd_) + k / (tau * tau);
        const double mean = (mu_mean_ / (mu_sd_ * mu_sd_) + sum / (tau * tau)) / precision;
        mu = mean + gauss(rng) / std::sqrt(precision);
      }

      // log tau given theta (centred)
      {
        const double prop = log_tau + std::exp(log_scale[j_]) * gauss(rng);
        const double lr = log_tau_conditional(prop, theta, z, mu) - log_tau_conditional(log_tau, theta, z, mu);
        if (metropolis(j_, lr)) log_tau = prop;
        tau = std::exp(log_tau);
      }

      // joint rescale of tau and exchangeable deviations
      {
        const double step = std::exp(log_scale[j_ + 1]) * gauss(rng);
        const double ratio = std::exp(step);
        double lr = log_tau_prior(log_tau + step) - log_tau_prior(log_tau);
        std::vector<double> prop = theta;
        for (std::size_t j = 0; j < j_; ++j) {
          if (!z[j]) continue;
          prop[j] = mu + ratio * (theta[j] - mu);
          lr += binomial_logit_loglik(prop[j], r_[j], n_[j]) - binomial_logit_loglik(theta[j], r_[j], n_[j]);
        }
        if (metropolis(j_ + 1, lr)) {
          theta = std::move(prop);
          log_tau += step;
          tau = std::exp(log_tau);
        }
      }

      // joint shift of mu and exchangeable theta_j
      {
        const double delta = std::exp(log_scale[j_ + 2]) * gauss(rng);
        double lr = log_normal_pdf(mu + delta, mu_mean_, mu_sd_) - log_normal_pdf(mu, mu_mean_, mu_sd_);
        for (std::size_t j = 0; j < j_; ++j) {
          if (!z[j]) continue;
          lr += binomial_logit_loglik(theta[j] + delta, r_[j], n_[j]) - binomial_logit_loglik(theta[j], r_[j], n_[j]);
        }
        if (metropolis(j_ + 2, lr)) {
          mu += delta;
          for (std::size_t j = 0; j < j_; ++j) {
            if (z[j]) theta[j] += delta;
          }
        }
      }

      if (!warm) {
        out.mu.push_back(mu);
        out.tau.push_back(tau);
        for (std::size_t j = 0; j < j_; ++j) {
          out.theta[j].push_back(theta[j]);
          out.z_sum[j] += z[j] ? 1.0 : 0.0;
        }
        out.theta_star.push_back(mu + tau * gauss(rng));
      }
    }
    return out;
  }

 private:
  [[nodiscard]] double log_prior_theta(double theta, double mu, double tau) const {
    const double l1 = log_normal_pdf(theta, mu, tau);
    if (spec_.weight >= 1.0) {
      return l1;
    }
    const double l0 = log_normal_pdf(theta, spec_.robust.mean, spec_.robust.sd);
    const double a = log_w_ + l1;
    const double b = log_1mw_ + l0;
    const double top = std::max(a, b);
    return top + std::log(std::exp(a - top) + std::exp(b - top));
  }

  /// Log prior of log tau including the Jacobian.
  [[nodiscard]] double log_tau_prior(double log_tau) const {
    return spec_.tau_prior.log_pdf(std::exp(log_tau)) + log_tau;
  }

  [[nodiscard]] double log_tau_conditional(double log_tau, const std::vector<double>& theta,
                                           const std::vector<bool>& z, double mu) const {
    const double tau = std::exp(log_tau);
    double acc = log_tau_prior(log_tau);
    for (std::size_t j = 0; j < j_; ++j) {
      if (z[j]) acc += log_normal_pdf(theta[j], mu, tau);
    }
    return acc;
  }

  HierModelSpec spec_;
  std::size_t j_;
  std::vector<double> r_;
  std::vector<double> n_;
  double mu_mean_ = 0.0;
  double mu_sd_ = 1.0;
  double log_w_ = 0.0;
  double log_1mw_ = -kInf;
};

inline ParameterDiagnostics summarize_parameter(std::string name, const std::vector<std::vector<double>>& chains) {
  std::vector<double> pooled;
  for (const auto& c : chains) pooled.insert(pooled.end(), c.begin(), c.end());
  const auto s = numeric::sample_mean(pooled);
  ParameterDiagnostics d;
  d.name = std::move(name);
  d.mean = s.mean;
  d.sd = s.std_error * std::sqrt(static_cast<double>(pooled.size()));
  d.rhat = split_rhat(chains);
  d.ess = effective_sample_size(chains);
  return d;
}

}  // namespace detail

/// Posterior of the hierarchical model for the given trials or subgroups.
inline HierarchyFit fit_hierarchy(const std::vector<TrialRecord>& trials, const HierModelSpec& spec,
                                  const McmcConfig& cfg = {}) {
  detail::require(trials.size() >= 2, "the hierarchical model needs at least two trials");
  for (const auto& t : trials) t.validate();
  spec.validate();
  cfg.validate();

  const detail::HierarchySampler sampler(trials, spec);
  std::vector<detail::ChainDraws> chains(cfg.chains);
  parallel_for(cfg.chains, cfg.threads, [&](std::size_t c) { chains[c] = sampler.run(cfg, c); });

  HierarchyFit fit;
  fit.trials = trials;
  fit.weight = spec.weight;
  const std::size_t j_count = trials.size();
  fit.theta.assign(j_count, {});
  fit.exchangeable_probability.assign(j_count, 0.0);
  std::vector<std::vector<double>> mu_chains;
  std::vector<std::vector<double>> tau_chains;
  std::vector<std::vector<std::vector<double>>> theta_chains(j_count);
  std::vector<double> accepted(chains.front().accepted.size(), 0.0);
  std::vector<double> proposed(accepted.size(), 0.0);
  for (auto& c : chains) {
    fit.mu.insert(fit.mu.end(), c.mu.begin(), c.mu.end());
    fit.tau.insert(fit.tau.end(), c.tau.begin(), c.tau.end());
    fit.theta_star.insert(fit.theta_star.end(), c.theta_star.begin(), c.theta_star.end());
    for (std::size_t j = 0; j < j_count; ++j) {
      fit.theta[j].insert(fit.theta[j].end(), c.theta[j].begin(), c.theta[j].end());
      fit.exchangeable_probability[j] += c.z_sum[j];
      theta_chains[j].push_back(std::move(c.theta[j]));
    }
    for (std::size_t s = 0; s < accepted.size(); ++s) {
      accepted[s] += c.accepted[s];
      proposed[s] += c.proposed[s];
    }
    mu_chains.push_back(std::move(c.mu));
    tau_chains.push_back(std::move(c.tau));
  }
  const auto draws = static_cast<double>(fit.mu.size());
  for (auto& p : fit.exchangeable_probability) p /= draws;
  for (std::size_t s = 0; s < accepted.size(); ++s) {
    fit.acceptance.push_back(proposed[s] > 0.0 ? accepted[s] / proposed[s] : kNaN);
  }

  fit.diagnostics.push_back(detail::summarize_parameter("mu", mu_chains));
  fit.diagnostics.push_back(detail::summarize_parameter("tau", tau_chains));
  for (std::size_t j = 0; j < j_count; ++j) {
    const std::string label = trials[j].label.empty() ? std::to_string(j + 1) : trials[j].label;
    fit.diagnostics.push_back(detail::summarize_parameter("theta[" + label + "]", theta_chains[j]));
  }
  if (cfg.check_convergence) {
    for (const auto& d : fit.diagnostics) {
      if (!(d.rhat <= cfg.max_rhat)) {
        detail::fail(ErrorCode::divergent_chains,
                     "split-Rhat " + std::to_string(d.rhat) + " for " + d.name + " exceeds " + std::to_string(cfg.max_rhat));
      }
    }
  }
  return fit;
}

/// MAP prior for a new trial: predictive draws of its response rate.
inline HierarchyFit map_prior(const std::vector<TrialRecord>& trials, const HierModelSpec& spec = HierModelSpec::map_default(),
                              const McmcConfig& cfg = {}) {
  detail::require(spec.weight == 1.0, "the MAP prior uses the fully exchangeable model");
  return fit_hierarchy(trials, spec, cfg);
}

/// Subgroup posteriors under the robust mixture with weight `spec.weight`.
inline HierarchyFit subgroup_posteriors(const std::vector<TrialRecord>& subgroups,
                                        const HierModelSpec& spec = HierModelSpec::subgroup_default(),
                                        const McmcConfig& cfg = {}) {
  return fit_hierarchy(subgroups, spec, cfg);
}

struct SampleEss {
  FitResult fit;
  EssEstimate elir;
  EssEstimate vr;
  EssEstimate mtm;
};

/// Approximates the sample law by a Beta (or normal) mixture and computes its ESS.
inline SampleEss ess_from_samples(std::span<const double> samples, const SamplingModel& model,
                                  const FitConfig& fit = {}, std::size_t k_max = 4, const EssOptions& opts = {}) {
  const MixtureFamily family = model.parameter_space() == kUnit ? MixtureFamily::beta : MixtureFamily::normal;
  SampleEss out;
  out.fit = auto_fit(samples, family, k_max, fit);
  out.elir = compute(EssMethod::elir, out.fit.mixture, model, opts);
  out.vr = compute(EssMethod::vr, out.fit.mixture, model, opts);
  out.mtm = compute(EssMethod::mtm, out.fit.mixture, model, opts);
  return out;
}

inline nlohmann::json to_json(const ParameterDiagnostics& d) {
  return {{"name", d.name}, {"mean", d.mean}, {"sd", d.sd}, {"rhat", d.rhat}, {"ess", d.ess}};
}

inline nlohmann::json to_json(const SampleEss& s) {
  return {{"fit", to_json(s.fit)}, {"ELIR", to_json(s.elir)}, {"VR", to_json(s.vr)}, {"MTM", to_json(s.mtm)}};
}

}  // namespace elir

#endif  // ELIR_HIERARCHY_HPP
