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

#ifndef ELIR_TOOLS_CLI_APP_HPP
#define ELIR_TOOLS_CLI_APP_HPP

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "elir.hpp"

namespace elir::cli {

enum ExitCode : int { kOk = 0, kInputError = 2, kComputeError = 3, kDiagnosticsError = 4 };

struct GlobalOptions {
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::string out;
  std::string format = "table";
};

/// Rows of strings rendered as an aligned text table or as CSV.
class Table {
 public:
  explicit Table(std::vector<std::string> header = {}) : header_(std::move(header)) {}

  void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }
  [[nodiscard]] bool empty() const { return header_.empty(); }

  void print_text(std::ostream& os) const {
    std::vector<std::size_t> width(header_.size(), 0);
    const auto widen = [&](const std::vector<std::string>& r) {
      for (std::size_t i = 0; i < r.size() && i < width.size(); ++i) width[i] = std::max(width[i], r[i].size());
    };
    widen(header_);
    for (const auto& r : rows_) widen(r);
    const auto line = [&](const std::vector<std::string>& r) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (i > 0) os << "  ";
        os << (i == 0 ? std::left : std::right) << std::setw(static_cast<int>(width[i])) << r[i];
      }
      os << std::right << '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
  }

  void print_csv(std::ostream& os) const {
    const auto line = [&](const std::vector<std::string>& r) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (i > 0) os << ',';
        os << quote(r[i]);
      }
      os << '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
  }

 private:
  static std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (const char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + '"';
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// What a subcommand produced. `display` is the rounded table for the
/// terminal, `csv` the full-precision one written to disk.
struct CommandResult {
  nlohmann::json document;
  Table display;
  Table csv;
  std::map<std::string, std::string> extra_files;
  std::vector<std::string> inputs;
  nlohmann::json config = nlohmann::json::object();
  int exit_code = kOk;
};

inline std::string fixed(double v, int digits) {
  if (!std::isfinite(v)) return "---";
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

inline std::string precise(double v) {
  if (!std::isfinite(v)) return "---";
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return os.str();
}

inline std::string display_ess(const EssEstimate& e) { return e.ok() ? fixed(e.value, 1) : "---"; }
inline std::string csv_ess(const EssEstimate& e) { return e.ok() ? precise(e.value) : "---"; }

/// Inline JSON when the argument starts with '{', otherwise a file path.
inline nlohmann::json load_json(const std::string& arg, std::vector<std::string>& inputs) {
  try {
    if (!arg.empty() && arg.front() == '{') return nlohmann::json::parse(arg);
    std::ifstream in(arg);
    if (!in) detail::fail(ErrorCode::parse_error, "cannot open " + arg);
    inputs.push_back(arg);
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    detail::fail(ErrorCode::parse_error, "invalid JSON in " + arg + ": " + e.what());
  }
}

inline EssMethod parse_method(std::string name) {
  std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::toupper(c); });
  std::replace(name.begin(), name.end(), '-', '.');
  return method_from_string(name);
}

inline std::vector<EssMethod> parse_methods(const std::vector<std::string>& names) {
  std::vector<EssMethod> out;
  for (const auto& n : names) {
    if (n == "all") return {kAllMethods.begin(), kAllMethods.end()};
    out.push_back(parse_method(n));
  }
  return out;
}

inline std::optional<EssMode> parse_mode(const std::string& s) {
  if (s == "auto") return std::nullopt;
  if (s == "exact") return EssMode::exact;
  if (s == "quadrature") return EssMode::quadrature;
  if (s == "mc" || s == "monte_carlo") return EssMode::monte_carlo;
  detail::fail(ErrorCode::parse_error, "unknown mode '" + s + "'");
}

inline double sorted_quantile(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

struct SampleSummary {
  double mean = kNaN;
  double sd = kNaN;
  double lower = kNaN;
  double upper = kNaN;
};

inline SampleSummary summarize(const std::vector<double>& x) {
  SampleSummary s;
  const auto m = numeric::sample_mean(x);
  s.mean = m.mean;
  s.sd = m.std_error * std::sqrt(static_cast<double>(x.size()));
  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  s.lower = sorted_quantile(sorted, 0.025);
  s.upper = sorted_quantile(sorted, 0.975);
  return s;
}

inline nlohmann::json to_json(const SampleSummary& s) {
  return {{"mean", s.mean}, {"sd", s.sd}, {"q025", s.lower}, {"q975", s.upper}};
}

inline int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::invalid_argument:
    case ErrorCode::out_of_support:
    case ErrorCode::invalid_datum:
    case ErrorCode::parse_error:
    case ErrorCode::support_violation:
    case ErrorCode::unknown_pair:
    case ErrorCode::incompatible_prior:
    case ErrorCode::not_conjugate:
      return kInputError;
    case ErrorCode::divergent_chains:
      return kDiagnosticsError;
    default:
      return kComputeError;
  }
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

struct EssArgs {
  std::string prior;
  std::string model;
  std::vector<std::string> methods{"all"};
  std::string mode = "auto";
  std::size_t n_sim = 1000000;
};

inline CommandResult cmd_ess(const EssArgs& a, const GlobalOptions& g) {
  CommandResult r;
  const Density prior = density_from_json(load_json(a.prior, r.inputs));
  const SamplingModel model = model_from_json(load_json(a.model, r.inputs));
  EssOptions opts;
  opts.mode = parse_mode(a.mode);
  opts.n_sim = a.n_sim;
  opts.seed = g.seed;
  opts.threads = g.threads;
  r.config = {{"prior", to_json(prior)}, {"model", to_json(model)}, {"mode", a.mode}, {"n_sim", a.n_sim}};

  r.display = Table({"method", "ESS", "se", "mode", "status"});
  r.csv = Table({"method", "ess", "se", "mode", "status"});
  nlohmann::json rows = nlohmann::json::array();
  for (const auto m : parse_methods(a.methods)) {
    const EssEstimate e = compute(m, prior, model, opts);
    const double se = e.std_error.value_or(kNaN);
    r.display.add({std::string(to_string(m)), display_ess(e), e.std_error ? fixed(se, 3) : "", std::string(to_string(e.mode)),
                   std::string(to_string(e.status))});
    r.csv.add({std::string(to_string(m)), csv_ess(e), e.std_error ? precise(se) : "", std::string(to_string(e.mode)),
               std::string(to_string(e.status))});
    rows.push_back(elir::to_json(e));
  }
  r.document = {{"prior", to_json(prior)}, {"model", to_json(model)}, {"estimates", rows}};
  return r;
}

struct ConsistencyArgs {
  std::string scenario;
  std::size_t replicates = 0;
  std::vector<std::size_t> sample_sizes;
  std::vector<std::string> methods;
};

inline CommandResult cmd_consistency(const ConsistencyArgs& a, const GlobalOptions& g, std::ostream& log) {
  CommandResult r;
  const nlohmann::json j = load_json(a.scenario, r.inputs);
  ConsistencyScenario s = scenario_from_json(j);
  if (a.replicates != 0) s.replicates = a.replicates;
  if (!a.sample_sizes.empty()) s.sample_sizes = a.sample_sizes;
  if (!a.methods.empty()) s.methods = parse_methods(a.methods);
  s.seed = g.seed;
  s.threads = g.threads;
  r.config = {{"scenario", j},
              {"replicates", s.replicates},
              {"N", s.sample_sizes},
              {"methods", [&] {
                 std::vector<std::string> m;
                 for (const auto x : s.methods) m.emplace_back(to_string(x));
                 return m;
               }()}};

  const auto report = run_consistency(s, [&](EssMethod m, std::size_t n) { log << to_string(m) << " N=" << n << " done\n"; });

  std::vector<std::string> header{"method", "prior ESS"};
  for (const auto n : s.sample_sizes) header.push_back("N=" + std::to_string(n));
  r.display = Table(header);
  for (const auto& row : report.rows) {
    std::vector<std::string> cells{std::string(to_string(row.method)), display_ess(row.prior_ess)};
    for (const auto& c : row.cells) cells.push_back(fixed(c.mean, 1) + " (" + fixed(c.std_error, 1) + ")");
    r.display.add(cells);
  }
  std::ostringstream csv;
  write_csv(csv, report);
  r.extra_files["consistency.csv"] = csv.str();
  r.document = elir::to_json(report);
  return r;
}

struct HierArgs {
  std::string data;
  std::string config;
  double weight = 1.0;
  std::optional<double> mu_sd;
  std::optional<double> tau_scale;
  std::optional<std::size_t> chains;
  std::optional<std::size_t> iterations;
  std::optional<std::size_t> warmup;
  std::vector<std::size_t> components;
  std::size_t k_max = 4;
  std::size_t n_sim = 1000000;
};

/// Applies `--config` keys, then explicit flags on top.
inline void configure(const HierArgs& a, const GlobalOptions& g, HierModelSpec& spec, McmcConfig& mcmc,
                      std::vector<std::size_t>& components, CommandResult& r) {
  nlohmann::json c = a.config.empty() ? nlohmann::json::object() : load_json(a.config, r.inputs);
  if (!c.is_object()) detail::fail(ErrorCode::parse_error, "config must be a JSON object");
  try {
    if (a.mu_sd) c["mu_sd"] = *a.mu_sd;
    if (a.tau_scale) c["tau_scale"] = *a.tau_scale;
    if (a.chains) c["chains"] = *a.chains;
    if (a.iterations) c["iterations"] = *a.iterations;
    if (a.warmup) c["warmup"] = *a.warmup;
    if (!a.components.empty()) c["components"] = a.components;
    if (c.contains("mu_sd")) spec.mu_prior = Density::normal(0.0, c.at("mu_sd").get<double>());
    if (c.contains("tau_scale")) spec.tau_prior = Density::half_normal(c.at("tau_scale").get<double>());
    mcmc.chains = c.value("chains", mcmc.chains);
    mcmc.iterations = c.value("iterations", mcmc.iterations);
    mcmc.warmup = c.value("warmup", mcmc.warmup);
    mcmc.max_rhat = c.value("max_rhat", mcmc.max_rhat);
    components = c.value("components", components);
  } catch (const nlohmann::json::exception& e) {
    detail::fail(ErrorCode::parse_error, std::string("invalid config: ") + e.what());
  }
  mcmc.seed = g.seed;
  mcmc.threads = g.threads;
  c["mu_sd"] = spec.mu_prior.as<Normal>()->sd;
  c["tau_scale"] = spec.tau_prior.as<HalfNormal>() != nullptr ? spec.tau_prior.as<HalfNormal>()->scale : kNaN;
  c["chains"] = mcmc.chains;
  c["iterations"] = mcmc.iterations;
  c["warmup"] = mcmc.warmup;
  c["max_rhat"] = mcmc.max_rhat;
  c["weight"] = spec.weight;
  r.config = c;
}

inline nlohmann::json diagnostics_json(const HierarchyFit& fit) {
  nlohmann::json d = nlohmann::json::array();
  for (const auto& p : fit.diagnostics) d.push_back(elir::to_json(p));
  return d;
}

inline CommandResult cmd_map(const HierArgs& a, const GlobalOptions& g) {
  CommandResult r;
  const auto trials = read_trials(a.data);
  r.inputs.push_back(a.data);
  HierModelSpec spec = HierModelSpec::map_default();
  McmcConfig mcmc;
  std::vector<std::size_t> components{1, 2, 3};
  configure(a, g, spec, mcmc, components, r);
  r.config["components"] = components;
  r.config["n_sim"] = a.n_sim;

  const HierarchyFit fit = map_prior(trials, spec, mcmc);
  const auto pi = fit.pi_star();
  const SampleSummary mcmc_summary = summarize(pi);
  const SamplingModel model = SamplingModel::binomial(Parameterization::mean);
  EssOptions opts;
  opts.n_sim = a.n_sim;
  opts.seed = g.seed;
  opts.threads = g.threads;

  r.display = Table({"approximation", "mean", "sd", "95% interval", "ESS_ELIR", "ESS_VR", "ESS_MTM", "KS"});
  r.csv = Table({"approximation", "components", "mean", "sd", "q025", "q975", "ess_elir", "ess_vr", "ess_mtm", "ks"});
  r.display.add({"MCMC", fixed(mcmc_summary.mean, 3), fixed(mcmc_summary.sd, 3),
                 fixed(mcmc_summary.lower, 2) + "-" + fixed(mcmc_summary.upper, 2), "", "", "", ""});
  r.csv.add({"MCMC", "", precise(mcmc_summary.mean), precise(mcmc_summary.sd), precise(mcmc_summary.lower),
             precise(mcmc_summary.upper), "", "", "", ""});

  nlohmann::json approximations = nlohmann::json::array();
  nlohmann::json mixtures = nlohmann::json::object();
  for (const std::size_t k : components) {
    FitConfig fc;
    fc.components = k;
    fc.seed = g.seed;
    fc.threads = g.threads;
    const FitResult f = fit_mixture(pi, MixtureFamily::beta, fc);
    const EssEstimate elir = compute(EssMethod::elir, f.mixture, model, opts);
    const EssEstimate vr = compute(EssMethod::vr, f.mixture, model, opts);
    const EssEstimate mtm = compute(EssMethod::mtm, f.mixture, model, opts);
    const double ks = ks_distance(pi, f.mixture);
    const double sd = std::sqrt(f.mixture.moments().variance);
    const double lo = f.mixture.quantile(0.025);
    const double hi = f.mixture.quantile(0.975);
    const std::string name = f.components == 1 ? "Beta" : std::to_string(f.components) + "-comp Beta";
    r.display.add({name, fixed(f.mixture.mean(), 3), fixed(sd, 3), fixed(lo, 2) + "-" + fixed(hi, 2), display_ess(elir),
                   display_ess(vr), display_ess(mtm), fixed(ks, 4)});
    r.csv.add({name, std::to_string(f.components), precise(f.mixture.mean()), precise(sd), precise(lo), precise(hi),
               csv_ess(elir), csv_ess(vr), csv_ess(mtm), precise(ks)});
    approximations.push_back({{"requested_components", k},
                              {"fit", elir::to_json(f)},
                              {"ks", ks},
                              {"ELIR", elir::to_json(elir)},
                              {"VR", elir::to_json(vr)},
                              {"MTM", elir::to_json(mtm)}});
    mixtures[std::to_string(k)] = elir::to_json(f.mixture);
  }
  r.document = {{"summary", to_json(mcmc_summary)},
                {"diagnostics", diagnostics_json(fit)},
                {"approximations", approximations}};
  r.extra_files["map_mixtures.json"] = mixtures.dump(2) + "\n";
  std::ostringstream samples;
  write_samples(samples, pi, "pi_star");
  r.extra_files["map_samples.csv"] = samples.str();
  return r;
}

inline CommandResult cmd_subgroups(const HierArgs& a, const GlobalOptions& g) {
  CommandResult r;
  const auto groups = read_trials(a.data);
  r.inputs.push_back(a.data);
  HierModelSpec spec = HierModelSpec::subgroup_default(a.weight);
  McmcConfig mcmc;
  std::vector<std::size_t> unused;
  configure(a, g, spec, mcmc, unused, r);
  r.config["k_max"] = a.k_max;
  r.config["n_sim"] = a.n_sim;

  const HierarchyFit fit = subgroup_posteriors(groups, spec, mcmc);
  const SamplingModel model = SamplingModel::binomial(Parameterization::mean);
  FitConfig fc;
  fc.seed = g.seed;
  fc.threads = g.threads;
  EssOptions opts;
  opts.n_sim = a.n_sim;
  opts.seed = g.seed;
  opts.threads = g.threads;

  r.display = Table({"subgroup", "r/n", "P(exch)", "mean", "sd", "K", "ESS_ELIR"});
  r.csv = Table({"subgroup", "r", "n", "p_exchangeable", "mean", "sd", "components", "ess_elir"});
  nlohmann::json rows = nlohmann::json::array();
  std::ostringstream samples;
  samples << std::setprecision(std::numeric_limits<double>::max_digits10);
  std::vector<std::vector<double>> pis;
  for (std::size_t j = 0; j < groups.size(); ++j) {
    pis.push_back(fit.pi(j));
    const SampleSummary s = summarize(pis.back());
    const SampleEss e = ess_from_samples(pis.back(), model, fc, a.k_max, opts);
    const auto& t = groups[j];
    const double pe = fit.exchangeable_probability[j];
    r.display.add({t.label, std::to_string(t.responders) + "/" + std::to_string(t.size), fixed(pe, 3), fixed(s.mean, 3),
                   fixed(s.sd, 3), std::to_string(e.fit.components), display_ess(e.elir)});
    r.csv.add({t.label, std::to_string(t.responders), std::to_string(t.size), precise(pe), precise(s.mean), precise(s.sd),
               std::to_string(e.fit.components), csv_ess(e.elir)});
    rows.push_back({{"label", t.label},
                    {"r", t.responders},
                    {"n", t.size},
                    {"exchangeable_probability", pe},
                    {"summary", to_json(s)},
                    {"fit", elir::to_json(e.fit)},
                    {"ELIR", elir::to_json(e.elir)}});
  }
  for (std::size_t j = 0; j < groups.size(); ++j) samples << (j > 0 ? "," : "") << groups[j].label;
  samples << '\n';
  for (std::size_t i = 0; i < pis.front().size(); ++i) {
    for (std::size_t j = 0; j < pis.size(); ++j) samples << (j > 0 ? "," : "") << pis[j][i];
    samples << '\n';
  }
  r.extra_files["subgroup_samples.csv"] = samples.str();
  r.document = {{"weight", a.weight}, {"subgroups", rows}, {"diagnostics", diagnostics_json(fit)}};
  return r;
}

struct MixfitArgs {
  std::string samples;
  std::string family = "beta";
  std::size_t components = 0;
  std::size_t k_max = 4;
  std::size_t restarts = 10;
  std::size_t max_iter = 500;
  double min_shape = 1.0;
  std::string model;
};

inline CommandResult cmd_mixfit(const MixfitArgs& a, const GlobalOptions& g) {
  CommandResult r;
  const auto x = read_samples(a.samples);
  r.inputs.push_back(a.samples);
  const MixtureFamily family = mixture_family_from_string(a.family);
  FitConfig fc;
  fc.restarts = a.restarts;
  fc.max_iter = a.max_iter;
  fc.min_beta_shape = a.min_shape;
  fc.seed = g.seed;
  fc.threads = g.threads;
  FitResult f;
  if (a.components == 0) {
    f = auto_fit(x, family, a.k_max, fc);
  } else {
    fc.components = a.components;
    f = fit_mixture(x, family, fc);
  }
  r.config = {{"family", a.family}, {"components", a.components}, {"k_max", a.k_max}, {"restarts", a.restarts},
              {"max_iter", a.max_iter}, {"min_beta_shape", a.min_shape}};
  const double ks = ks_distance(x, f.mixture);
  r.document = {{"fit", elir::to_json(f)}, {"ks", ks}, {"samples", x.size()}};

  const bool beta = family == MixtureFamily::beta;
  r.display = Table({"component", "weight", beta ? "a" : "mean", beta ? "b" : "sd"});
  r.csv = Table({"component", "weight", beta ? "a" : "mean", beta ? "b" : "sd"});
  const auto& comps = f.mixture.as<MixtureDensity>()->components();
  for (std::size_t k = 0; k < comps.size(); ++k) {
    double p1 = 0.0;
    double p2 = 0.0;
    if (const auto* b = std::get_if<Beta>(&comps[k].kernel)) {
      p1 = b->a;
      p2 = b->b;
    } else if (const auto* n = std::get_if<Normal>(&comps[k].kernel)) {
      p1 = n->mean;
      p2 = n->sd;
    }
    r.display.add({std::to_string(k + 1), fixed(comps[k].weight, 3), fixed(p1, 3), fixed(p2, 3)});
    r.csv.add({std::to_string(k + 1), precise(comps[k].weight), precise(p1), precise(p2)});
  }
  if (!a.model.empty()) {
    const SamplingModel model = model_from_json(load_json(a.model, r.inputs));
    EssOptions opts;
    opts.seed = g.seed;
    opts.threads = g.threads;
    nlohmann::json ess = nlohmann::json::array();
    for (const auto m : kAllMethods) ess.push_back(elir::to_json(compute(m, f.mixture, model, opts)));
    r.document["ess"] = ess;
    r.config["model"] = to_json(model);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream os(p, std::ios::binary);
  if (!os) detail::fail(ErrorCode::parse_error, "cannot write " + p.string());
  os << content;
}

inline void emit(const std::string& command, const CommandResult& r, const GlobalOptions& g, double seconds,
                 std::ostream& out) {
  if (g.format == "json") {
    out << r.document.dump(2) << '\n';
  } else if (g.format == "csv") {
    if (!r.csv.empty()) {
      r.csv.print_csv(out);
    } else if (auto it = r.extra_files.find(command + ".csv"); it != r.extra_files.end()) {
      out << it->second;
    }
  } else if (!r.display.empty()) {
    r.display.print_text(out);
  }
  if (g.out.empty()) return;

  const std::filesystem::path dir(g.out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) detail::fail(ErrorCode::parse_error, "cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::string> outputs;
  const auto put = [&](const std::string& name, const std::string& content) {
    write_file(dir / name, content);
    outputs.push_back((dir / name).string());
  };
  put(command + ".json", r.document.dump(2) + "\n");
  if (!r.csv.empty()) {
    std::ostringstream csv;
    r.csv.print_csv(csv);
    put(command + ".csv", csv.str());
  }
  for (const auto& [name, content] : r.extra_files) put(name, content);
  const nlohmann::json manifest = {{"command", command},
                                   {"inputs", r.inputs},
                                   {"config", r.config},
                                   {"seed", g.seed},
                                   {"threads", resolve_threads(g.threads)},
                                   {"version", std::string(kVersion)},
                                   {"outputs", outputs},
                                   {"wall_seconds", seconds}};
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

/// Parses `argv`, runs one subcommand and returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Effective sample size of priors, posteriors and MCMC-derived mixtures"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(kVersion));
  GlobalOptions g;
  app.add_option("--seed", g.seed, "Master seed for all random streams");
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)");
  app.add_option("--out", g.out, "Directory for output files and manifest.json");
  app.add_option("--format", g.format, "Standard output format")->check(CLI::IsMember({"json", "csv", "table"}));

  EssArgs ess;
  auto* ess_cmd = app.add_subcommand("ess", "ESS of a prior under a sampling model");
  ess_cmd->add_option("--prior", ess.prior, "Prior density JSON or file")->required();
  ess_cmd->add_option("--model", ess.model, "Sampling model JSON or file")->required();
  ess_cmd->add_option("--method", ess.methods, "all|vr|pr|mtm|mtm-p|elir (repeatable)");
  ess_cmd->add_option("--mode", ess.mode, "auto|exact|quadrature|mc");
  ess_cmd->add_option("--nsim", ess.n_sim, "Monte Carlo draws");

  ConsistencyArgs cons;
  auto* cons_cmd = app.add_subcommand("consistency", "Expected posterior ESS minus N over prior-predictive data");
  cons_cmd->add_option("scenario", cons.scenario, "Scenario JSON file")->required();
  cons_cmd->add_option("--replicates", cons.replicates, "Override the scenario's replicate count");
  cons_cmd->add_option("--N", cons.sample_sizes, "Override the planned sample sizes");
  cons_cmd->add_option("--method", cons.methods, "Override the methods");

  HierArgs map;
  auto* map_cmd = app.add_subcommand("map", "MAP prior from historical trials and its mixture approximations");
  HierArgs sub;
  auto* sub_cmd = app.add_subcommand("subgroups", "Subgroup posteriors under a robust hierarchical model");
  for (auto [cmd, h] : {std::pair{map_cmd, &map}, std::pair{sub_cmd, &sub}}) {
    cmd->add_option("data", h->data, "CSV with columns label,r,n")->required();
    cmd->add_option("--config", h->config, "JSON with mu_sd, tau_scale, chains, iterations, warmup, max_rhat");
    cmd->add_option("--mu-sd", h->mu_sd, "Prior sd of the population log-odds");
    cmd->add_option("--tau-scale", h->tau_scale, "Half-normal scale of the between-trial sd");
    cmd->add_option("--chains", h->chains, "MCMC chains");
    cmd->add_option("--iterations", h->iterations, "Post-warmup iterations per chain");
    cmd->add_option("--warmup", h->warmup, "Warmup iterations per chain");
    cmd->add_option("--nsim", h->n_sim, "Monte Carlo draws for mixture ELIR");
  }
  map_cmd->add_option("--components", map.components, "Beta mixture sizes to fit");
  sub_cmd->add_option("--weight", sub.weight, "Exchangeability weight in (0, 1]");
  sub_cmd->add_option("--kmax", sub.k_max, "Largest mixture size tried by the AIC fit");

  MixfitArgs mix;
  auto* mix_cmd = app.add_subcommand("mixfit", "Fit a Beta or normal mixture to samples");
  mix_cmd->add_option("samples", mix.samples, "One-column sample file")->required();
  mix_cmd->add_option("--family", mix.family, "beta|normal")->check(CLI::IsMember({"beta", "normal"}));
  mix_cmd->add_option("--components", mix.components, "Mixture size (0 = choose by AIC)");
  mix_cmd->add_option("--kmax", mix.k_max, "Largest size tried when choosing by AIC");
  mix_cmd->add_option("--restarts", mix.restarts, "EM restarts");
  mix_cmd->add_option("--max-iter", mix.max_iter, "EM iterations per restart");
  mix_cmd->add_option("--min-shape", mix.min_shape, "Lower bound on Beta shape parameters")->check(CLI::PositiveNumber);
  mix_cmd->add_option("--model", mix.model, "Sampling model JSON for ESS of the fit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }

  const auto start = std::chrono::steady_clock::now();
  std::string command;
  try {
    CommandResult r;
    if (ess_cmd->parsed()) {
      command = "ess";
      r = cmd_ess(ess, g);
    } else if (cons_cmd->parsed()) {
      command = "consistency";
      r = cmd_consistency(cons, g, err);
    } else if (map_cmd->parsed()) {
      command = "map";
      r = cmd_map(map, g);
    } else if (sub_cmd->parsed()) {
      command = "subgroups";
      r = cmd_subgroups(sub, g);
    } else {
      command = "mixfit";
      r = cmd_mixfit(mix, g);
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    emit(command, r, g, seconds, out);
    return r.exit_code;
  } catch (const Error& e) {
    err << "elir " << command << ": " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const nlohmann::json::exception& e) {
    err << "elir " << command << ": invalid JSON: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    err << "elir " << command << ": " << e.what() << '\n';
    return kComputeError;
  }
}

}  // namespace elir::cli

#endif  // ELIR_TOOLS_CLI_APP_HPP
