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

#ifndef ELIR_CONSISTENCY_HPP
#define ELIR_CONSISTENCY_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "elir/densities.hpp"
#include "elir/error.hpp"
#include "elir/ess.hpp"
#include "elir/models.hpp"
#include "elir/numeric.hpp"
#include "elir/posterior.hpp"
#include "elir/random.hpp"

/**
 * \file
 * \brief Prior-predictive check of posterior ESS against prior ESS.
 *
 * Each replicate draws theta from the prior, N units at theta, builds the grid
 * posterior and records posterior ESS minus N. A method is consistent when the
 * average matches the prior ESS for every N.
 */

namespace elir {

struct ConsistencyScenario {
  std::string name;
  Density prior = Density::normal(0.0, 1.0);
  SamplingModel model = SamplingModel::normal(1.0);
  std::vector<EssMethod> methods{kAllMethods.begin(), kAllMethods.end()};
  std::vector<std::size_t> sample_sizes{10, 100, 1000};
  std::size_t replicates = 10000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  GridConfig grid;
  EpsilonPrior epsilon;

  void validate() const {
    detail::require(replicates >= 100, "consistency needs at least 100 replicates");
    detail::require(!sample_sizes.empty(), "consistency needs at least one sample size");
    detail::require(!methods.empty(), "consistency needs at least one method");
    for (const auto n : sample_sizes) {
      detail::require(n >= 1, "sample sizes must be positive");
    }
    require_compatible(prior, model);
  }
};

struct ConsistencyCell {
  std::size_t sample_size = 0;
  /// Mean of posterior ESS minus N over successful replicates.
  double mean = kNaN;
  double std_error = kNaN;
  std::size_t failures = 0;
};

struct ConsistencyRow {
  EssMethod method = EssMethod::elir;
  EssEstimate prior_ess;
  std::vector<ConsistencyCell> cells;
};

struct ConsistencyReport {
  std::string scenario;
  std::size_t replicates = 0;
  std::vector<ConsistencyRow> rows;

  [[nodiscard]] const ConsistencyRow& row(EssMethod m) const {
    for (const auto& r : rows) {
      if (r.method == m) return r;
    }
    detail::fail(ErrorCode::invalid_argument, "method not in report: " + std::string(to_string(m)));
  }
};

/// Fraction of failed replicates above which a sample size is rejected.
inline constexpr double kMaxFailureFraction = 0.10;

/// Runs the experiment. `progress(method, n)` is called after each cell.
inline ConsistencyReport run_consistency(const ConsistencyScenario& s,
                                         const std::function<void(EssMethod, std::size_t)>& progress = {}) {
  s.validate();
  ConsistencyReport report;
  report.scenario = s.name;
  report.replicates = s.replicates;
  EssOptions prior_opts;
  prior_opts.seed = s.seed;
  prior_opts.threads = s.threads;
  prior_opts.epsilon = s.epsilon;
  for (const auto method : s.methods) {
    ConsistencyRow row;
    row.method = method;
    row.prior_ess = compute(method, s.prior, s.model, prior_opts);
    report.rows.push_back(row);
  }

  const std::size_t k = s.methods.size();
  for (std::size_t ni = 0; ni < s.sample_sizes.size(); ++ni) {
    const std::size_t n = s.sample_sizes[ni];
    // values[rep * k + method]; NaN marks a failed replicate
    std::vector<double> values(s.replicates * k, kNaN);
    parallel_for(s.replicates, s.threads, [&](std::size_t rep) {
      Engine rng = make_engine(s.seed, {static_cast<std::uint64_t>(ni), static_cast<std::uint64_t>(rep)});
      double* out = values.data() + rep * k;
      try {
        const double theta = s.prior.draw(rng);
        const DataSummary data = s.model.draw_summary(theta, n, rng);
        const GridPosterior gp(s.prior, s.model, data, s.grid);
        for (std::size_t j = 0; j < k; ++j) {
          try {
            const double v = posterior_ess(gp, s.methods[j], s.epsilon).value - static_cast<double>(n);
            out[j] = std::isfinite(v) ? v : kNaN;
          } catch (const Error&) {
            out[j] = kNaN;
          }
        }
      } catch (const Error&) {
        // whole replicate fails; slots stay NaN
      }
    });

    for (std::size_t j = 0; j < k; ++j) {
      std::vector<double> ok;
      ok.reserve(s.replicates);
      for (std::size_t rep = 0; rep < s.replicates; ++rep) {
        if (const double v = values[rep * k + j]; !std::isnan(v)) {
          ok.push_back(v);
        }
      }
      ConsistencyCell cell;
      cell.sample_size = n;
      cell.failures = s.replicates - ok.size();
      if (static_cast<double>(cell.failures) > kMaxFailureFraction * static_cast<double>(s.replicates)) {
        detail::fail(ErrorCode::scenario_failed, std::to_string(cell.failures) + " of " +
                                                     std::to_string(s.replicates) + " replicates failed for " +
                                                     std::string(to_string(s.methods[j])) + " at N=" +
                                                     std::to_string(n));
      }
      const auto stats = numeric::sample_mean(ok);
      cell.mean = stats.mean;
      cell.std_error = stats.std_error;
      report.rows[j].cells.push_back(cell);
      if (progress) {
        progress(s.methods[j], n);
      }
    }
  }
  return report;
}

inline ConsistencyScenario scenario_from_json(const nlohmann::json& j) {
  ConsistencyScenario s;
  try {
    s.name = j.value("name", std::string{});
    s.prior = density_from_json(j.at("prior"));
    s.model = model_from_json(j.at("model"));
    if (j.contains("methods")) {
      s.methods.clear();
      for (const auto& m : j.at("methods")) {
        s.methods.push_back(method_from_string(m.get<std::string>()));
      }
    }
    if (j.contains("N")) {
      s.sample_sizes = j.at("N").get<std::vector<std::size_t>>();
    }
    s.replicates = j.value("replicates", s.replicates);
    s.seed = j.value("seed", s.seed);
    s.grid.points = j.value("grid_points", s.grid.points);
  } catch (const nlohmann::json::exception& e) {
    detail::fail(ErrorCode::parse_error, std::string("bad scenario: ") + e.what());
  }
  s.validate();
  return s;
}

inline nlohmann::json to_json(const ConsistencyReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : row.cells) {
      cells.push_back({{"N", c.sample_size}, {"mean", c.mean}, {"std_error", c.std_error}, {"failures", c.failures}});
    }
    rows.push_back({{"method", to_string(row.method)}, {"prior_ess", to_json(row.prior_ess)}, {"cells", cells}});
  }
  return {{"scenario", r.scenario}, {"replicates", r.replicates}, {"rows", rows}};
}

namespace detail {

inline std::string format_ess(const EssEstimate& e) {
  if (!e.ok()) return "---";
  std::ostringstream os;
  os << std::setprecision(10) << e.value;
  return os.str();
}

}  // namespace detail

/// CSV laid out like the published table, one row per method.
inline void write_csv(std::ostream& os, const ConsistencyReport& r) {
  os << "method,prior_ess";
  if (!r.rows.empty()) {
    for (const auto& c : r.rows.front().cells) os << ",N=" << c.sample_size;
    for (const auto& c : r.rows.front().cells) os << ",se_N=" << c.sample_size;
    for (const auto& c : r.rows.front().cells) os << ",failures_N=" << c.sample_size;
  }
  os << '\n';
  for (const auto& row : r.rows) {
    os << to_string(row.method) << ',' << detail::format_ess(row.prior_ess);
    os << std::setprecision(10);
    for (const auto& c : row.cells) os << ',' << c.mean;
    for (const auto& c : row.cells) os << ',' << c.std_error;
    for (const auto& c : row.cells) os << ',' << c.failures;
    os << '\n';
  }
}

}  // namespace elir

#endif  // ELIR_CONSISTENCY_HPP
