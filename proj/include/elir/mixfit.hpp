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

#ifndef ELIR_MIXFIT_HPP
#define ELIR_MIXFIT_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <nlohmann/json.hpp>

#include "elir/densities.hpp"
#include "elir/error.hpp"
#include "elir/numeric.hpp"
#include "elir/random.hpp"

/**
 * \file
 * \brief EM fits of normal or Beta mixtures to samples.
 *
 * Used to turn MCMC output into a parametric prior whose ESS can then be
 * computed. Each fit keeps the best of several k-means++ seeded restarts;
 * `auto_fit` picks the component count by AIC.
 */

namespace elir {

enum class MixtureFamily { normal, beta };

constexpr std::string_view to_string(MixtureFamily f) noexcept { return f == MixtureFamily::normal ? "normal" : "beta"; }

inline MixtureFamily mixture_family_from_string(std::string_view s) {
  if (s == "normal") return MixtureFamily::normal;
  if (s == "beta") return MixtureFamily::beta;
  detail::fail(ErrorCode::invalid_argument, "mixture family must be 'normal' or 'beta'");
}

struct FitConfig {
  std::size_t components = 1;
  std::size_t max_iter = 500;
  /// Relative change in log-likelihood at which EM stops.
  double tolerance = 1e-8;
  std::size_t restarts = 10;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  /// Lower bound on Beta shape parameters. The default of 1 keeps the
  /// mixture's ELIR finite; shapes below 1 make it diverge at 0 or 1.
  double min_beta_shape = 1.0;
};

struct FitResult {
  Density mixture = Density::normal(0.0, 1.0);
  std::size_t components = 0;
  double log_likelihood = -kInf;
  std::size_t iterations = 0;
  double aic = kInf;
  bool converged = false;
  /// Log-likelihood of each accepted iterate since the last pruning.
  std::vector<double> trace;
  std::size_t restart = 0;
};

/// 2 * (free parameters) - 2 * log-likelihood for a K-component mixture.
inline double mixture_aic(std::size_t k, double log_likelihood) {
  return 2.0 * static_cast<double>(3 * k - 1) - 2.0 * log_likelihood;
}

/// Largest gap between the empirical CDF of `samples` and `d`.
inline double ks_distance(std::vector<double> samples, const Density& d) {
  std::sort(samples.begin(), samples.end());
  const auto n = static_cast<double>(samples.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = d.cdf(samples[i]);
    worst = std::max({worst, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
  }
  return worst;
}

namespace detail {

inline constexpr double kMinWeight = 1e-4;
inline constexpr double kMinVariance = 1e-10;
inline constexpr double kBetaFloor = 1e-3;
// extrapolated points beyond this |log parameter| are rejected
inline constexpr double kMaxLogParameter = 30.0;
inline constexpr double kMaxShape = 1e12;

struct Component {
  double weight;
  // normal: mean, variance; beta: a, b
  double p1;
  double p2;
};

class EmFitter {
 public:
  EmFitter(std::span<const double> x, MixtureFamily family, double min_shape = kBetaFloor)
      : x_(x), family_(family), n_(x.size()), floor_(std::max(min_shape, kBetaFloor)) {
    if (family_ == MixtureFamily::beta) {
      log_x_.resize(n_);
      log_1mx_.resize(n_);
      for (std::size_t i = 0; i < n_; ++i) {
        log_x_[i] = std::log(x_[i]);
        log_1mx_[i] = std::log1p(-x_[i]);
      }
    }
  }

  /// EM accelerated by squared extrapolation (SQUAREM). An extrapolated
  /// point is kept only if it does not lower the likelihood, so the trace
  /// stays monotone. `max_iter` counts EM maps.
  FitResult run(std::size_t k, const FitConfig& cfg, Engine& rng) const {
    std::vector<Component> comps = seed(k, rng);
    FitResult out;
    std::vector<double> resp;
    double ll = e_step(comps, resp);
    out.trace.push_back(ll);
    while (out.iterations < cfg.max_iter) {
      const double prev = ll;
      const std::vector<Component> c0 = comps;
      // two plain EM maps
      std::vector<Component> c1 = c0;
      m_step(c1, resp);
      const double ll1 = e_step(c1, resp);
      std::vector<Component> c2 = c1;
      m_step(c2, resp);
      ll = e_step(c2, resp);
      out.iterations += 2;
      out.trace.push_back(ll1);
      out.trace.push_back(ll);
      comps = std::move(c2);
      if (auto jump = extrapolate(c0, c1, comps); jump && out.iterations < cfg.max_iter) {
        std::vector<double> rj;
        if (std::isfinite(e_step(*jump, rj))) {
          m_step(*jump, rj);
          ++out.iterations;
          if (const double lj = e_step(*jump, rj); std::isfinite(lj) && lj >= ll) {
            comps = std::move(*jump);
            resp = std::move(rj);
            ll = lj;
            out.trace.push_back(ll);
          }
        }
      }
      if (prune(comps)) {
        ll = e_step(comps, resp);
        out.trace.assign(1, ll);
        continue;
      }
      if (std::abs(ll - prev) <= cfg.tolerance * std::abs(ll)) {
        out.converged = true;
        break;
      }
    }
    out.log_likelihood = ll;
    out.components = comps.size();
    out.aic = mixture_aic(comps.size(), out.log_likelihood);
    out.mixture = to_density(comps);
    return out;
  }

 private:
  [[nodiscard]] double component_log_pdf(const Component& c, double lnorm, std::size_t i) const {
    if (family_ == MixtureFamily::normal) {
      const double z = x_[i] - c.p1;
      return lnorm - 0.5 * z * z / c.p2;
    }
    return lnorm + (c.p1 - 1.0) * log_x_[i] + (c.p2 - 1.0) * log_1mx_[i];
  }

  [[nodiscard]] double log_norm(const Component& c) const {
    if (family_ == MixtureFamily::normal) {
      return -0.5 * std::log(2.0 * boost::math::constants::pi<double>() * c.p2);
    }
    return -log_beta_fn(c.p1, c.p2);
  }

  /// Fills responsibilities (row-major n x K) and returns the log-likelihood.
  double e_step(const std::vector<Component>& comps, std::vector<double>& resp) const {
    const std::size_t k = comps.size();
    resp.assign(n_ * k, 0.0);
    std::vector<double> offset(k);
    for (std::size_t j = 0; j < k; ++j) {
      offset[j] = std::log(comps[j].weight) + log_norm(comps[j]);
    }
    std::vector<double> ll(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      double* r = resp.data() + i * k;
      double top = -kInf;
      for (std::size_t j = 0; j < k; ++j) {
        r[j] = component_log_pdf(comps[j], offset[j], i);
        top = std::max(top, r[j]);
      }
      double sum = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        r[j] = std::exp(r[j] - top);
        sum += r[j];
      }
      for (std::size_t j = 0; j < k; ++j) {
        r[j] /= sum;
      }
      ll[i] = top + std::log(sum);
    }
    return numeric::pairwise_sum(ll);
  }

  void m_step(std::vector<Component>& comps, const std::vector<double>& resp) const {
    const std::size_t k = comps.size();
    for (std::size_t j = 0; j < k; ++j) {
      double w = 0.0;
      double s1 = 0.0;
      double s2 = 0.0;
      for (std::size_t i = 0; i < n_; ++i) {
        const double r = resp[i * k + j];
        w += r;
        if (family_ == MixtureFamily::normal) {
          s1 += r * x_[i];
        } else {
          s1 += r * log_x_[i];
          s2 += r * log_1mx_[i];
        }
      }
      comps[j].weight = w / static_cast<double>(n_);
      if (w <= 0.0) {
        continue;
      }
      if (family_ == MixtureFamily::normal) {
        const double mean = s1 / w;
        double ss = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
          const double z = x_[i] - mean;
          ss += resp[i * k + j] * z * z;
        }
        comps[j].p1 = mean;
        comps[j].p2 = ss / w;
      } else {
        beta_newton(comps[j], s1 / w, s2 / w);
      }
    }
  }

  /// Maximises (a-1) L1 + (b-1) L2 - log B(a, b) from the current point.
  void beta_newton(Component& c, double l1, double l2) const {
    const auto objective = [&](double a, double b) { return (a - 1.0) * l1 + (b - 1.0) * l2 - log_beta_fn(a, b); };
    double a = c.p1;
    double b = c.p2;
    double f = objective(a, b);
    for (int it = 0; it < 100; ++it) {
      const double psi_ab = boost::math::digamma(a + b);
      const double g1 = l1 - boost::math::digamma(a) + psi_ab;
      const double g2 = l2 - boost::math::digamma(b) + psi_ab;
      const double t_ab = boost::math::trigamma(a + b);
      // negative Hessian, positive definite
      const double h11 = boost::math::trigamma(a) - t_ab;
      const double h22 = boost::math::trigamma(b) - t_ab;
      const double h12 = -t_ab;
      const double det = h11 * h22 - h12 * h12;
      // a coordinate held at the floor is dropped from the Newton system
      const bool hold_a = a <= floor_ && g1 <= 0.0;
      const bool hold_b = b <= floor_ && g2 <= 0.0;
      double da = (h22 * g1 - h12 * g2) / det;
      double db = (h11 * g2 - h12 * g1) / det;
      if (hold_a && hold_b) break;
      if (hold_a) {
        da = 0.0;
        db = g2 / h22;
      } else if (hold_b) {
        da = g1 / h11;
        db = 0.0;
      }
      if (!std::isfinite(da) || !std::isfinite(db)) {
        break;
      }
      double step = 1.0;
      bool moved = false;
      for (int half = 0; half < 60; ++half, step *= 0.5) {
        const double na = std::clamp(a + step * da, floor_, kMaxShape);
        const double nb = std::clamp(b + step * db, floor_, kMaxShape);
        const double nf = objective(na, nb);
        if (nf >= f) {
          moved = na != a || nb != b;
          a = na;
          b = nb;
          f = nf;
          break;
        }
      }
      if (!moved || (std::abs(step * da) <= 1e-12 * a && std::abs(step * db) <= 1e-12 * b)) {
        break;
      }
    }
    c.p1 = a;
    c.p2 = b;
  }

  /// Unconstrained coordinates: log weight ratios to the last component,
  /// then (mean, log variance) or (log a, log b) per component.
  [[nodiscard]] std::vector<double> pack(const std::vector<Component>& comps) const {
    std::vector<double> t;
    const double last = std::log(comps.back().weight);
    for (const auto& c : comps) {
      t.push_back(std::log(c.weight) - last);
      t.push_back(family_ == MixtureFamily::normal ? c.p1 : std::log(c.p1));
      t.push_back(std::log(c.p2));
    }
    return t;
  }

  [[nodiscard]] std::vector<Component> unpack(const std::vector<double>& t) const {
    const std::size_t k = t.size() / 3;
    std::vector<Component> comps(k);
    double top = -kInf;
    for (std::size_t j = 0; j < k; ++j) top = std::max(top, t[3 * j]);
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      comps[j].weight = std::exp(t[3 * j] - top);
      total += comps[j].weight;
      comps[j].p1 = family_ == MixtureFamily::normal ? t[3 * j + 1] : std::max(std::exp(t[3 * j + 1]), floor_);
      comps[j].p2 = family_ == MixtureFamily::normal ? std::exp(t[3 * j + 2]) : std::max(std::exp(t[3 * j + 2]), floor_);
    }
    for (auto& c : comps) c.weight /= total;
    return comps;
  }

  /// Squared-extrapolation point from three successive iterates.
  [[nodiscard]] std::optional<std::vector<Component>> extrapolate(const std::vector<Component>& c0,
                                                                  const std::vector<Component>& c1,
                                                                  const std::vector<Component>& c2) const {
    if (c0.size() != c1.size() || c1.size() != c2.size()) return std::nullopt;
    const auto t0 = pack(c0);
    const auto t1 = pack(c1);
    const auto t2 = pack(c2);
    double rr = 0.0;
    double vv = 0.0;
    for (std::size_t i = 0; i < t0.size(); ++i) {
      const double r = t1[i] - t0[i];
      const double v = t2[i] - 2.0 * t1[i] + t0[i];
      rr += r * r;
      vv += v * v;
    }
    if (!(vv > 0.0) || !std::isfinite(rr)) return std::nullopt;
    const double alpha = std::min(-std::sqrt(rr / vv), -1.0);
    std::vector<double> t(t0.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double r = t1[i] - t0[i];
      const double v = t2[i] - 2.0 * t1[i] + t0[i];
      t[i] = t0[i] - 2.0 * alpha * r + alpha * alpha * v;
      const bool log_scale = i % 3 == 2 || (i % 3 == 1 && family_ == MixtureFamily::beta);
      if (!std::isfinite(t[i]) || (log_scale && std::abs(t[i]) > kMaxLogParameter)) return std::nullopt;
    }
    return unpack(t);
  }

  [[nodiscard]] static double component_variance(const Component& c, MixtureFamily family) {
    if (family == MixtureFamily::normal) return c.p2;
    const double s = c.p1 + c.p2;
    return c.p1 * c.p2 / (s * s * (s + 1.0));
  }

  bool prune(std::vector<Component>& comps) const {
    if (comps.size() == 1) {
      return false;
    }
    const auto before = comps.size();
    std::erase_if(comps, [this](const Component& c) {
      return c.weight < kMinWeight || component_variance(c, family_) < kMinVariance;
    });
    if (comps.empty()) {
      fail(ErrorCode::non_convergence, "every mixture component degenerated");
    }
    if (comps.size() == before) {
      return false;
    }
    double total = 0.0;
    for (const auto& c : comps) total += c.weight;
    for (auto& c : comps) c.weight /= total;
    return true;
  }

  /// k-means++ centres, nearest-centre assignment, then moment matching.
  std::vector<Component> seed(std::size_t k, Engine& rng) const {
    std::vector<double> centres;
    centres.push_back(x_[boost::random::uniform_int_distribution<std::size_t>(0, n_ - 1)(rng)]);
    std::vector<double> d2(n_, kInf);
    while (centres.size() < k) {
      double total = 0.0;
      for (std::size_t i = 0; i < n_; ++i) {
        const double z = x_[i] - centres.back();
        d2[i] = std::min(d2[i], z * z);
        total += d2[i];
      }
      if (total <= 0.0) {
        break;
      }
      double u = boost::random::uniform_01<double>()(rng) * total;
      std::size_t pick = n_ - 1;
      for (std::size_t i = 0; i < n_; ++i) {
        u -= d2[i];
        if (u <= 0.0) {
          pick = i;
          break;
        }
      }
      centres.push_back(x_[pick]);
    }
    const std::size_t m = centres.size();
    std::vector<double> w(m, 0.0);
    std::vector<double> s(m, 0.0);
    std::vector<double> ss(m, 0.0);
    double grand = 0.0;
    double grand_ss = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      std::size_t best = 0;
      for (std::size_t j = 1; j < m; ++j) {
        if (std::abs(x_[i] - centres[j]) < std::abs(x_[i] - centres[best])) best = j;
      }
      w[best] += 1.0;
      s[best] += x_[i];
      ss[best] += x_[i] * x_[i];
      grand += x_[i];
      grand_ss += x_[i] * x_[i];
    }
    const auto nd = static_cast<double>(n_);
    const double total_var = std::max(grand_ss / nd - (grand / nd) * (grand / nd), 1e-12);
    std::vector<Component> comps;
    for (std::size_t j = 0; j < m; ++j) {
      if (w[j] == 0.0) continue;
      const double mean = s[j] / w[j];
      const double var = std::max(ss[j] / w[j] - mean * mean, 1e-2 * total_var);
      Component c{w[j] / nd, mean, var};
      if (family_ == MixtureFamily::beta) {
        const double mv = std::clamp(mean, 1e-6, 1.0 - 1e-6);
        const double v = std::min(var, 0.99 * mv * (1.0 - mv));
        const double conc = mv * (1.0 - mv) / v - 1.0;
        c.p1 = std::max(mv * conc, floor_);
        c.p2 = std::max((1.0 - mv) * conc, floor_);
      }
      comps.push_back(c);
    }
    return comps;
  }

  [[nodiscard]] Density to_density(const std::vector<Component>& comps) const {
    std::vector<MixtureComponent> out;
    for (const auto& c : comps) {
      if (family_ == MixtureFamily::normal) {
        out.push_back({c.weight, Normal{c.p1, std::sqrt(c.p2)}});
      } else {
        out.push_back({c.weight, Beta{c.p1, c.p2}});
      }
    }
    return Density::mixture(std::move(out));
  }

  std::span<const double> x_;
  MixtureFamily family_;
  std::size_t n_;
  std::vector<double> log_x_;
  std::vector<double> log_1mx_;
  double floor_;
};

inline void check_samples(std::span<const double> samples, MixtureFamily family) {
  require(samples.size() >= 100, "mixture fitting needs at least 100 samples");
  for (const double x : samples) {
    if (!std::isfinite(x)) {
      fail(ErrorCode::support_violation, "sample is not finite");
    }
    if (family == MixtureFamily::beta && (x <= 0.0 || x >= 1.0)) {
      fail(ErrorCode::support_violation, "Beta mixture samples must lie in (0, 1)");
    }
  }
}

}  // namespace detail

/// Best of `cfg.restarts` EM runs with `cfg.components` components.
inline FitResult fit_mixture(std::span<const double> samples, MixtureFamily family, const FitConfig& cfg = {}) {
  detail::check_samples(samples, family);
  detail::require(cfg.components >= 1, "mixture needs at least one component");
  detail::require(cfg.components <= MixtureDensity::kMaxComponents, "too many mixture components");
  detail::require(cfg.restarts >= 1, "at least one restart is needed");
  detail::require(cfg.min_beta_shape > 0.0, "minimum Beta shape must be positive");
  const detail::EmFitter fitter(samples, family, cfg.min_beta_shape);
  std::vector<FitResult> runs(cfg.restarts);
  parallel_for(cfg.restarts, cfg.threads, [&](std::size_t r) {
    Engine rng = make_engine(cfg.seed, {static_cast<std::uint64_t>(cfg.components), static_cast<std::uint64_t>(r)});
    runs[r] = fitter.run(cfg.components, cfg, rng);
    runs[r].restart = r;
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r].log_likelihood > runs[best].log_likelihood) best = r;
  }
  return runs[best];
}

/// Fits 1..k_max components and keeps the lowest AIC, preferring fewer.
inline FitResult auto_fit(std::span<const double> samples, MixtureFamily family, std::size_t k_max = 4,
                          const FitConfig& base = {}) {
  detail::require(k_max >= 1, "k_max must be at least 1");
  FitResult best;
  for (std::size_t k = 1; k <= k_max; ++k) {
    FitConfig cfg = base;
    cfg.components = k;
    FitResult r = fit_mixture(samples, family, cfg);
    if (k == 1 || r.aic < best.aic) {
      best = std::move(r);
    }
  }
  return best;
}

inline nlohmann::json to_json(const FitResult& r) {
  return {{"mixture", to_json(r.mixture)}, {"components", r.components}, {"log_likelihood", r.log_likelihood},
          {"iterations", r.iterations},    {"aic", r.aic},               {"converged", r.converged}};
}

}  // namespace elir

#endif  // ELIR_MIXFIT_HPP
