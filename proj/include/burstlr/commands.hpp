// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "burstlr/binning.hpp"
#include "burstlr/csv.hpp"
#include "burstlr/decision.hpp"
#include "burstlr/error.hpp"
#include "burstlr/io.hpp"
#include "burstlr/limitlaw.hpp"
#include "burstlr/lrstats.hpp"
#include "burstlr/model.hpp"
#include "burstlr/simharness.hpp"

namespace burstlr {

enum class Command { Detect, Calibrate, Simulate, Validate, Power };

inline Command parse_command(std::string_view s) {
  if (s == "detect") return Command::Detect;
  if (s == "calibrate") return Command::Calibrate;
  if (s == "simulate") return Command::Simulate;
  if (s == "validate") return Command::Validate;
  if (s == "power") return Command::Power;
  throw ConfigError("unknown command '" + std::string(s) +
                    "' (expected detect|calibrate|simulate|validate|power)");
}

struct Profile {
  std::size_t per_bin;
  std::size_t replications;
};

inline Profile profile_defaults(std::string_view name) {
  if (name == "desk") return {200, 2000};
  if (name == "deep") return {1000, 10000};
  throw ConfigError("unknown profile '" + std::string(name) + "' (expected desk|deep)");
}

// Everything a command needs; populated from flags and an optional config file.
struct RunConfig {
  Command command = Command::Detect;
  std::string model = "poisson";
  double sigma = 1.0;
  std::vector<double> theta0;
  std::string null;  // "name=value,..." or bare values fixing leading coordinates
  std::optional<std::size_t> P;
  std::optional<std::size_t> G;
  std::optional<std::size_t> k;
  std::optional<double> alpha;
  std::optional<double> level;
  std::string input;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reps;
  std::vector<double> offsets;
  std::size_t threads = 1;
  std::string profile = "desk";
  std::string procedure = "standard";
  std::optional<std::size_t> r;
  std::vector<std::size_t> counts;
  std::optional<std::size_t> per_bin;
  std::vector<double> burst;  // start, end
  std::vector<double> theta1;
  std::size_t mc_count = 100000;
};

// --------------------------------------------------------------------------
// Config helpers

inline ParametricModel make_model(const RunConfig& cfg) {
  if (cfg.model == "poisson") return ParametricModel::poisson();
  if (cfg.model == "gaussian-known-variance" || cfg.model == "gauss-known") {
    return ParametricModel::gaussian_known_variance(cfg.sigma);
  }
  if (cfg.model == "gaussian" || cfg.model == "gauss") return ParametricModel::gaussian_mean_variance();
  if (cfg.model == "exponential") return ParametricModel::exponential();
  throw ConfigError("unknown model '" + cfg.model +
                    "' (expected poisson|gaussian-known-variance|gaussian|exponential)");
}

inline Parameter make_parameter(const ParametricModel& model, const std::vector<double>& v,
                                std::string_view what) {
  if (v.size() != model.dimension()) {
    throw ConfigError(std::string(what) + ": expected " + std::to_string(model.dimension()) +
                      " value(s) for model " + std::string(model.name()));
  }
  Parameter p{Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()))};
  if (!model.in_domain(p)) throw ConfigError(std::string(what) + ": outside the parameter domain");
  return p;
}

// "lambda=2" / "mu=0" / "2" / "0,1".
inline NullSpec parse_null(const ParametricModel& model, std::string_view text) {
  const auto names = model.parameter_names();
  std::vector<std::size_t> idx;
  std::vector<double> vals;
  std::size_t pos = 0;
  std::size_t bare = 0;
  while (pos <= text.size()) {
    auto end = text.find(',', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto item = detail::trim(text.substr(pos, end - pos));
    pos = end + 1;
    if (item.empty()) {
      if (end == text.size()) break;
      throw ConfigError("null: empty item");
    }
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) {
      idx.push_back(bare++);
      vals.push_back(detail::parse_real(item, 0, "null"));
    } else {
      const auto name = detail::trim(item.substr(0, eq));
      std::size_t i = 0;
      while (i < names.size() && names[i] != name) ++i;
      if (i == names.size()) throw ConfigError("null: unknown parameter '" + std::string(name) + "'");
      idx.push_back(i);
      vals.push_back(detail::parse_real(item.substr(eq + 1), 0, "null"));
    }
    if (end == text.size()) break;
  }
  return NullSpec::make(model, idx, vals);
}

inline std::string describe_null(const ParametricModel& model, const NullSpec& null) {
  const auto names = model.parameter_names();
  std::string s;
  for (std::size_t i = 0; i < null.r(); ++i) {
    if (i) s += ",";
    s += names[null.fixed_indices()[i]] + "=" + format_real(null.fixed_values()[i]);
  }
  return s;
}

namespace detail {

template <typename T>
const T& require(const std::optional<T>& v, std::string_view flag) {
  if (!v) throw ConfigError("missing required flag --" + std::string(flag));
  return *v;
}

inline std::uint64_t require_seed(const RunConfig& cfg) {
  if (!cfg.seed) throw ConfigError("randomized command requires an explicit --seed");
  return *cfg.seed;
}

inline std::ofstream open_output(const std::filesystem::path& dir, std::string_view name) {
  std::filesystem::create_directories(dir);
  std::ofstream os(dir / std::string(name), std::ios::binary | std::ios::trunc);
  if (!os) throw ConfigError("cannot write '" + (dir / std::string(name)).string() + "'");
  return os;
}

inline void write_json(const std::filesystem::path& dir, std::string_view name,
                       const nlohmann::json& j) {
  auto os = open_output(dir, name);
  os << j.dump(2) << '\n';
}

inline void check_alpha_level(const RunConfig& cfg) {
  if (cfg.alpha && cfg.level) throw ConfigError("give exactly one of --alpha and --level");
  if (!cfg.alpha && !cfg.level) throw ConfigError("one of --alpha or --level is required");
  if (cfg.alpha && !(*cfg.alpha > 0.0 && *cfg.alpha < 1.0)) throw ConfigError("--alpha must lie in (0, 1)");
  if (cfg.level && !(*cfg.level > 0.0 && *cfg.level < 1.0)) throw ConfigError("--level must lie in (0, 1)");
}

inline void check_windows(std::size_t P, std::size_t G, std::size_t k) {
  if (P == 0) throw ConfigError("--P must be at least 1");
  if (G == 0 || G > P) throw ConfigError("require 1 <= G <= P");
  if (k == 0) throw ConfigError("--k must be at least 1");
}

inline std::size_t resolve_r(const RunConfig& cfg) {
  if (cfg.r) {
    if (*cfg.r == 0) throw ConfigError("--r must be at least 1");
    return *cfg.r;
  }
  if (!cfg.null.empty()) return parse_null(make_model(cfg), cfg.null).r();
  return 1;
}

// Null hypothesis for simulation commands: --null if given, otherwise the
// simple null at theta0 for one-parameter families.
inline NullSpec scenario_null(const RunConfig& cfg, const ParametricModel& model,
                              const Parameter& theta0) {
  if (!cfg.null.empty()) return parse_null(model, cfg.null);
  if (model.dimension() == 1) return NullSpec::simple(model, theta0[0]);
  throw ConfigError("--null is required for multi-parameter models");
}

inline ScenarioSpec make_scenario(const RunConfig& cfg, bool need_windows) {
  const ParametricModel model = make_model(cfg);
  const Profile prof = profile_defaults(cfg.profile);
  std::vector<double> theta0_values = cfg.theta0;
  if (theta0_values.empty()) {
    if (cfg.null.empty()) throw ConfigError("--theta0 is required");
    const NullSpec n = parse_null(model, cfg.null);
    if (n.r() != model.dimension()) throw ConfigError("--theta0 is required");
    theta0_values = n.fixed_values();
  }
  const Parameter theta0 = make_parameter(model, theta0_values, "--theta0");
  NullSpec null = scenario_null(cfg, model, theta0);

  std::vector<std::size_t> counts = cfg.counts;
  if (counts.empty()) {
    const std::size_t P = cfg.P.value_or(8);
    counts.assign(P, cfg.per_bin.value_or(prof.per_bin));
  } else if (cfg.P && *cfg.P != counts.size()) {
    throw ConfigError("--counts has " + std::to_string(counts.size()) + " entries but --P is " +
                      std::to_string(*cfg.P));
  }
  const std::size_t G = need_windows ? require(cfg.G, "G") : cfg.G.value_or(1);
  ScenarioSpec spec(model, theta0, std::move(null), std::move(counts), G);
  spec.k = cfg.k.value_or(1);
  if (need_windows) check_windows(spec.P, spec.G, spec.k);
  spec.alpha = cfg.alpha;
  spec.level = cfg.level;
  spec.replications = cfg.reps.value_or(prof.replications);
  spec.seed = require_seed(cfg);
  spec.threads = cfg.threads;
  spec.mc_count = cfg.mc_count;
  if (!cfg.burst.empty()) {
    if (cfg.burst.size() != 2) throw ConfigError("--burst expects start,end");
    if (cfg.theta1.empty()) throw ConfigError("--burst requires --theta1");
    spec.burst = Burst{cfg.burst[0], cfg.burst[1], make_parameter(model, cfg.theta1, "--theta1")};
  }
  spec.validate();
  return spec;
}

inline nlohmann::json scenario_json(const ScenarioSpec& spec) {
  nlohmann::json j;
  j["model"] = spec.model.name();
  if (spec.model.family() == Family::GaussianKnownVariance) j["sigma"] = spec.model.sigma();
  j["theta0"] = spec.theta0.to_vector();
  j["null"] = describe_null(spec.model, spec.null);
  j["r"] = spec.r();
  j["simple_null_extension"] = spec.null.is_simple();
  j["P"] = spec.P;
  j["G"] = spec.G;
  j["k"] = spec.k;
  j["counts"] = spec.counts;
  j["replications"] = spec.replications;
  j["seed"] = spec.seed;
  j["generator"] = CounterRng::kName;
  if (spec.burst) {
    j["burst"] = {{"start", spec.burst->start},
                  {"end", spec.burst->end},
                  {"theta1", spec.burst->theta1.to_vector()},
                  {"sub_window", spec.sub_window_burst()}};
  }
  return j;
}

inline nlohmann::json matrix_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(row);
  }
  return rows;
}

inline void write_windows_csv(std::ostream& os, const LrVector& lr) {
  for (std::size_t i = 0; i < lr.size(); ++i) {
    const auto& w = lr.windows[i];
    CsvRow(os) << to_string(lr.kind) << i + 1 << w.lambda << w.xi << w.first_bin << w.last_bin
               << w.observations << w.skipped() << to_string(w.status);
  }
}

}  // namespace detail

// --------------------------------------------------------------------------
// Commands. Each writes its files into cfg.out and returns normally, or throws.

/*!
 * Bins the input events, computes both statistic vectors and writes
 * report.json plus windows.csv. The standard procedure is reported only when
 * G divides P. With --level each procedure is calibrated to that level (the
 * sliding one by Monte Carlo on the observed counts); with --alpha both use
 * it and report their estimated level.
 */
inline void cmd_detect(const RunConfig& cfg) {
  const std::size_t P = detail::require(cfg.P, "P");
  const std::size_t G = detail::require(cfg.G, "G");
  const std::size_t k = detail::require(cfg.k, "k");
  detail::check_windows(P, G, k);
  detail::check_alpha_level(cfg);
  if (cfg.input.empty()) throw ConfigError("missing required flag --input");
  if (cfg.null.empty()) throw ConfigError("missing required flag --null");
  const std::uint64_t seed = detail::require_seed(cfg);
  const ParametricModel model = make_model(cfg);
  const NullSpec null = parse_null(model, cfg.null);

  const auto events = read_events_file(cfg.input);
  const BinnedDataset data = bin_observations(events, P);
  if (data.total() == 0) throw ConfigError("no observations inside (0, P]");
  const std::size_t r = null.r();
  const WindowIndexing idx(P, G);

  nlohmann::json report;
  report["model"] = model.name();
  report["null"] = describe_null(model, null);
  report["r"] = r;
  report["simple_null_extension"] = null.is_simple();
  report["P"] = P;
  report["G"] = G;
  report["k"] = k;
  report["seed"] = seed;
  report["observations"] = data.total();
  report["dropped"] = data.dropped();
  report["counts"] = data.counts();

  std::ostringstream windows;
  windows << "procedure,i,lambda,xi,first_bin,last_bin,observations,skipped,status\n";

  // Standard procedure
  report["standard"] = nullptr;
  if (idx.divides()) {
    const LrVector lr = lambda_standard(data, model, null, G);
    const std::size_t N = idx.N();
    double alpha = 0.0;
    if (cfg.level) {
      alpha = calibrate_standard(*cfg.level, k, N, r).alpha;
    } else {
      alpha = *cfg.alpha;
    }
    DecisionReport d = reject_standard(lr, alpha, k);
    d.level_estimate = type1_standard(N, k, alpha, r);
    d.provenance = LevelProvenance::Binomial;
    report["standard"] = to_json(d);
    detail::write_windows_csv(windows, lr);
  }

  // Sliding procedure
  const LrVector lr = lambda_new(data, model, null, G);
  std::optional<CorrelationMatrix> R;
  try {
    R = correlation_matrix(std::span<const std::size_t>(data.counts()), G);
  } catch (const DegenerateDataError&) {
  }
  double alpha = 0.0;
  std::optional<McEstimate> level;
  if (cfg.level) {
    if (!R) throw NumericalError("cannot calibrate: a sliding window has no observations");
    const Calibration cal = calibrate_sliding(*cfg.level, k, *R, r, G, cfg.mc_count, seed,
                                              SamplerOptions{cfg.threads});
    alpha = cal.alpha;
    level = McEstimate{cal.achieved, cal.se, cal.mc_count};
  } else {
    alpha = *cfg.alpha;
    if (R && k <= R->M()) {
      level = type1_new(*R, r, alpha, k, G, cfg.mc_count, seed, SamplerOptions{cfg.threads});
    }
  }
  DecisionReport d = reject_new(lr, alpha, k, G);
  if (level) {
    d.level_estimate = level->estimate;
    d.level_se = level->se;
    d.provenance = LevelProvenance::MonteCarlo;
  }
  report["sliding"] = to_json(d);
  report["mc_count"] = cfg.mc_count;
  report["generator"] = CounterRng::kName;
  detail::write_windows_csv(windows, lr);

  const std::filesystem::path out(cfg.out);
  detail::write_json(out, "report.json", report);
  detail::open_output(out, "windows.csv") << windows.str();
}

inline void cmd_calibrate(const RunConfig& cfg) {
  if (!cfg.level) throw ConfigError("missing required flag --level");
  if (cfg.alpha) throw ConfigError("calibrate takes --level, not --alpha");
  if (!(*cfg.level > 0.0 && *cfg.level < 1.0)) throw ConfigError("--level must lie in (0, 1)");
  const std::size_t k = detail::require(cfg.k, "k");
  const std::size_t G = detail::require(cfg.G, "G");
  const std::size_t r = detail::resolve_r(cfg);
  const Procedure procedure = parse_procedure(cfg.procedure);

  std::vector<std::size_t> counts = cfg.counts;
  std::size_t P = 0;
  if (!counts.empty()) {
    P = counts.size();
    if (cfg.P && *cfg.P != P) throw ConfigError("--counts length disagrees with --P");
  } else {
    P = detail::require(cfg.P, "P");
    counts.assign(P, cfg.per_bin.value_or(1));
  }
  detail::check_windows(P, G, k);

  Calibration cal;
  if (procedure == Procedure::Standard) {
    const WindowIndexing idx(P, G);
    cal = calibrate_standard(*cfg.level, k, idx.N(), r);
  } else {
    const std::uint64_t seed = detail::require_seed(cfg);
    const CorrelationMatrix R = correlation_matrix(std::span<const std::size_t>(counts), G);
    cal = calibrate_sliding(*cfg.level, k, R, r, G, cfg.mc_count, seed, SamplerOptions{cfg.threads});
  }
  nlohmann::json j = to_json(cal);
  j["k"] = k;
  j["G"] = G;
  j["P"] = P;
  j["r"] = r;
  j["counts"] = counts;
  j["generator"] = CounterRng::kName;
  detail::write_json(cfg.out, "calibration.json", j);
}

// Writes one synthetic dataset as events.csv (readable by detect) and a
// simulation.json summary. With --burst, draws inside the burst follow --theta1.
inline void cmd_simulate(const RunConfig& cfg) {
  const ScenarioSpec spec = detail::make_scenario(cfg, false);
  const auto events = spec.burst ? generate_burst_events(spec, 0) : generate_h0_events(spec, 0);
  const std::filesystem::path out(cfg.out);
  {
    auto os = detail::open_output(out, "events.csv");
    write_events_csv(os, events);
  }
  nlohmann::json j = detail::scenario_json(spec);
  j["observations"] = events.size();
  detail::write_json(out, "simulation.json", j);
}

inline void cmd_validate(const RunConfig& cfg) {
  const ScenarioSpec spec = detail::make_scenario(cfg, true);
  if (spec.burst) throw ConfigError("validate runs under H0; drop --burst");
  for (std::size_t i = 0; i < spec.null.r(); ++i) {
    if (spec.theta0[spec.null.fixed_indices()[i]] != spec.null.fixed_values()[i]) {
      throw ConfigError("validate: --theta0 must satisfy the null hypothesis");
    }
  }
  const ValidationReport rep = validate_limit_laws(spec, spec.replications);
  const auto& t2 = *rep.theorem2;
  const auto& t1 = *rep.theorem1;
  const std::filesystem::path out(cfg.out);

  {
    auto os = detail::open_output(out, "ks.csv");
    os << "window,ks,tolerance\n";
    for (std::size_t i = 0; i < t2.ks.size(); ++i) CsvRow(os) << i + 1 << t2.ks[i] << t2.ks_tolerance;
  }
  {
    auto os = detail::open_output(out, "xi_correlation.csv");
    os << "i,j,empirical,theory\n";
    for (Eigen::Index i = 0; i < t2.corr_theory.rows(); ++i) {
      for (Eigen::Index j = 0; j < t2.corr_theory.cols(); ++j) {
        CsvRow(os) << static_cast<std::size_t>(i + 1) << static_cast<std::size_t>(j + 1)
                   << t2.corr_empirical(i, j) << t2.corr_theory(i, j);
      }
    }
  }
  {
    auto os = detail::open_output(out, "mle_covariance.csv");
    os << "i,j,frobenius_error\n";
    for (Eigen::Index i = 0; i < t1.block_frobenius.rows(); ++i) {
      for (Eigen::Index j = 0; j < t1.block_frobenius.cols(); ++j) {
        CsvRow(os) << static_cast<std::size_t>(i + 1) << static_cast<std::size_t>(j + 1)
                   << t1.block_frobenius(i, j);
      }
    }
  }
  nlohmann::json j;
  j["scenario"] = detail::scenario_json(spec);
  j["replications"] = rep.replications;
  j["used"] = rep.used;
  j["excluded"] = rep.excluded;
  j["exclusion_rate"] = rep.exclusion_rate;
  j["theorem2"] = {{"ks", t2.ks},
                   {"max_ks", t2.max_ks},
                   {"ks_tolerance", t2.ks_tolerance},
                   {"correlation_empirical", detail::matrix_json(t2.corr_empirical)},
                   {"correlation_theory", detail::matrix_json(t2.corr_theory)},
                   {"max_correlation_error_near", t2.max_corr_error_near},
                   {"max_correlation_error_far", t2.max_corr_error_far},
                   {"correlation_tolerance_near", t2.corr_tolerance_near},
                   {"correlation_tolerance_far", t2.corr_tolerance_far},
                   {"pass", t2.pass()}};
  j["theorem1"] = {{"covariance_empirical", detail::matrix_json(t1.cov_empirical)},
                   {"covariance_theory", detail::matrix_json(t1.cov_theory)},
                   {"block_frobenius_error", detail::matrix_json(t1.block_frobenius)},
                   {"max_z", t1.max_z},
                   {"z_tolerance", t1.z_tolerance},
                   {"pass", t1.pass()}};
  j["verdict"] = rep.pass() ? "pass" : "fail";
  detail::write_json(out, "validation.json", j);
}

inline void cmd_power(const RunConfig& cfg) {
  const ScenarioSpec spec = detail::make_scenario(cfg, true);
  if (!spec.burst) throw ConfigError("power requires --burst and --theta1");
  if (cfg.alpha && cfg.level) throw ConfigError("give at most one of --alpha and --level");
  std::vector<double> offsets = cfg.offsets;
  if (offsets.empty()) offsets = {0.0, 0.25, 0.5, 0.75};
  const PowerTable table = power_comparison(spec, offsets);
  const std::filesystem::path out(cfg.out);
  {
    auto os = detail::open_output(out, "power.csv");
    os << "scenario,offset,procedure,mode,alpha,power,se,replications\n";
    for (const auto& row : table.rows) {
      CsvRow(os) << (row.under_h0 ? "h0" : "burst") << row.offset << to_string(row.procedure)
                 << to_string(row.mode) << row.alpha << row.power.estimate << row.power.se
                 << row.power.count;
    }
  }
  nlohmann::json j;
  j["scenario"] = detail::scenario_json(spec);
  j["offsets"] = offsets;
  j["equal_alpha"] = table.equal_alpha;
  j["target_level"] = table.target_level;
  j["inclusion_violations"] = table.inclusion_violations;
  j["standard_calibration"] = to_json(table.standard_calibration);
  j["sliding_calibration"] = to_json(table.sliding_calibration);
  j["sliding_calibration"].erase("trace");
  j["standard_calibration"].erase("trace");
  detail::write_json(out, "power.json", j);
}

inline void run_command(const RunConfig& cfg) {
  switch (cfg.command) {
    case Command::Detect: return cmd_detect(cfg);
    case Command::Calibrate: return cmd_calibrate(cfg);
    case Command::Simulate: return cmd_simulate(cfg);
    case Command::Validate: return cmd_validate(cfg);
    case Command::Power: return cmd_power(cfg);
  }
}

}  // namespace burstlr
