// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "burstlr/error.hpp"
#include "burstlr/limitlaw.hpp"
#include "burstlr/lrstats.hpp"
#include "burstlr/spacing.hpp"
#include "burstlr/special.hpp"

namespace burstlr {

enum class Procedure { Standard, Sliding };

inline std::string_view to_string(Procedure p) {
  return p == Procedure::Standard ? "standard" : "sliding";
}

inline Procedure parse_procedure(std::string_view s) {
  if (s == "standard") return Procedure::Standard;
  if (s == "sliding" || s == "new") return Procedure::Sliding;
  throw ConfigError("unknown procedure '" + std::string(s) + "' (expected standard|sliding)");
}

// Lambda threshold alpha and the equivalent Xi threshold c = -2 ln alpha.
inline double threshold_from_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  return -2.0 * std::log(alpha);
}

inline double alpha_from_threshold(double c) { return std::exp(-0.5 * c); }

enum class LevelProvenance { None, Binomial, MonteCarlo };

inline std::string_view to_string(LevelProvenance p) {
  switch (p) {
    case LevelProvenance::None: return "none";
    case LevelProvenance::Binomial: return "binomial";
    case LevelProvenance::MonteCarlo: return "monte-carlo";
  }
  return "none";
}

struct DecisionReport {
  Procedure procedure = Procedure::Standard;
  bool reject = false;
  std::vector<std::size_t> witness;  // 1-based window indices
  std::vector<double> lambda;
  std::vector<double> xi;
  std::vector<std::size_t> skipped;  // 1-based window indices
  double alpha = 0.0;
  double c = 0.0;
  std::size_t k = 0;
  std::size_t G = 0;
  std::optional<double> level_estimate;
  double level_se = 0.0;
  LevelProvenance provenance = LevelProvenance::None;
};

namespace detail {

inline DecisionReport decide(const LrVector& lr, double alpha, std::size_t k, std::size_t G,
                             std::size_t spacing, Procedure procedure) {
  if (k == 0) throw ConfigError("decision: k must be at least 1");
  DecisionReport out;
  out.procedure = procedure;
  out.alpha = alpha;
  out.c = threshold_from_alpha(alpha);
  out.k = k;
  out.G = G;
  out.lambda = lr.lambda();
  out.xi = lr.xi();
  for (std::size_t i = 0; i < lr.size(); ++i) {
    if (lr.windows[i].skipped()) out.skipped.push_back(i + 1);
  }
  // Strictly below alpha; skipped windows never qualify.
  auto witness = spaced_witness(lr.size(), k, spacing, [&](std::size_t i) {
    return !lr.windows[i].skipped() && lr.windows[i].lambda < alpha;
  });
  if (witness) {
    out.reject = true;
    for (std::size_t i : *witness) out.witness.push_back(i + 1);
  }
  return out;
}

}  // namespace detail

// Rejects when at least k disjoint-window statistics fall below alpha.
inline DecisionReport reject_standard(const LrVector& lr, double alpha, std::size_t k) {
  if (lr.kind != LrKind::Standard) throw ConfigError("reject_standard: expects a standard LrVector");
  return detail::decide(lr, alpha, k, lr.G, 1, Procedure::Standard);
}

// Rejects when k sliding statistics below alpha exist with index gaps >= G.
inline DecisionReport reject_new(const LrVector& lr, double alpha, std::size_t k, std::size_t G) {
  if (lr.kind != LrKind::Sliding) throw ConfigError("reject_new: expects a sliding LrVector");
  if (G == 0) throw ConfigError("reject_new: G must be at least 1");
  return detail::decide(lr, alpha, k, G, G, Procedure::Sliding);
}

// Type-I error of the standard procedure: P(Binomial(N, p_alpha) >= k),
// with p_alpha the chi-squared(r) tail at -2 ln alpha.
inline double type1_standard(std::size_t N, std::size_t k, double alpha, std::size_t r) {
  if (k == 0) throw ConfigError("type1_standard: k must be at least 1");
  if (r == 0) throw ConfigError("type1_standard: r must be at least 1");
  const double p = chi2_sf(threshold_from_alpha(alpha), static_cast<double>(r));
  return binomial_upper_tail(N, k, p);
}

// Monte Carlo type-I error of the sliding procedure under the limit law.
inline McEstimate type1_new(const CorrelationMatrix& R, std::size_t r, double alpha,
                            std::size_t k, std::size_t G, std::size_t mc_count,
                            std::uint64_t seed, SamplerOptions options = {}) {
  return rejection_probability(R, r, threshold_from_alpha(alpha), k, G, mc_count, seed, options);
}

struct CalibrationStep {
  double c = 0.0;
  double level = 0.0;
};

struct Calibration {
  Procedure procedure = Procedure::Standard;
  double target = 0.0;
  double alpha = 0.0;
  double c = 0.0;
  double achieved = 0.0;  // level at the returned threshold
  double se = 0.0;        // zero for the exact binomial route
  LevelProvenance method = LevelProvenance::Binomial;
  std::size_t mc_count = 0;
  std::uint64_t seed = 0;
  std::vector<CalibrationStep> trace;
};

inline constexpr double kCalibrationMaxThreshold = 200.0;
inline constexpr double kBinomialCalibrationTolerance = 1e-10;

namespace detail {

inline void check_level(double level) {
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("target level must lie in (0, 1)");
}

}  // namespace detail

// Solves type1_standard(N, k, alpha, r) = level by bisection on c in [0, 200].
inline Calibration calibrate_standard(double level, std::size_t k, std::size_t N, std::size_t r) {
  detail::check_level(level);
  if (k == 0 || r == 0) throw ConfigError("calibrate: k and r must be at least 1");
  auto size_at = [&](double c) {
    return binomial_upper_tail(N, k, chi2_sf(c, static_cast<double>(r)));
  };
  Calibration out;
  out.procedure = Procedure::Standard;
  out.target = level;
  out.method = LevelProvenance::Binomial;
  double lo = 0.0;
  double hi = kCalibrationMaxThreshold;
  if (!(size_at(lo) > level) || !(size_at(hi) < level)) {
    throw CalibrationError("calibrate: level " + format_real(level) +
                           " is unreachable for thresholds in [0, 200]");
  }
  double c = 0.5 * (lo + hi);
  double achieved = size_at(c);
  for (int i = 0; i < 400; ++i) {
    out.trace.push_back({c, achieved});
    if (std::fabs(achieved - level) <= kBinomialCalibrationTolerance) break;
    if (achieved > level) {
      lo = c;
    } else {
      hi = c;
    }
    if (hi - lo <= 1e-15 * hi) break;
    c = 0.5 * (lo + hi);
    achieved = size_at(c);
  }
  out.c = c;
  out.alpha = alpha_from_threshold(c);
  out.achieved = achieved;
  return out;
}

/*!
 * Calibrates the sliding procedure on a fixed batch of limit-law draws, so
 * every bisection step sees common random numbers. Bisects to the smallest
 * threshold whose estimated level does not exceed the target and requires
 * the achieved level to be within 2 standard errors of it.
 */
inline Calibration calibrate_sliding(double level, std::size_t k, const LimitSampleBatch& batch,
                                     std::size_t G) {
  detail::check_level(level);
  Calibration out;
  out.procedure = Procedure::Sliding;
  out.target = level;
  out.method = LevelProvenance::MonteCarlo;
  out.mc_count = batch.count();
  out.seed = batch.seed;
  auto size_at = [&](double c) { return rejection_probability(batch, c, k, G).estimate; };
  double lo = 0.0;
  double hi = kCalibrationMaxThreshold;
  const double at_lo = size_at(lo);
  const double at_hi = size_at(hi);
  out.trace.push_back({lo, at_lo});
  out.trace.push_back({hi, at_hi});
  if (!(at_lo > level) || at_hi > level) {
    throw CalibrationError("calibrate: level " + format_real(level) +
                           " is unreachable for thresholds in [0, 200]");
  }
  for (int i = 0; i < 80 && hi - lo > 1e-12 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double v = size_at(mid);
    out.trace.push_back({mid, v});
    if (v > level) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const McEstimate est = rejection_probability(batch, hi, k, G);
  out.c = hi;
  out.alpha = alpha_from_threshold(hi);
  out.achieved = est.estimate;
  out.se = est.se;
  const double se_target = std::sqrt(level * (1.0 - level) / static_cast<double>(batch.count()));
  if (std::fabs(est.estimate - level) > 2.0 * std::max(est.se, se_target)) {
    throw CalibrationError("calibrate: achieved level " + format_real(est.estimate) +
                           " is not within 2 s.e. of the target");
  }
  return out;
}

inline Calibration calibrate_sliding(double level, std::size_t k, const CorrelationMatrix& R,
                                     std::size_t r, std::size_t G, std::size_t mc_count,
                                     std::uint64_t seed, SamplerOptions options = {}) {
  detail::check_level(level);
  if (k == 0 || k > R.M()) throw ConfigError("calibrate: require 1 <= k <= M");
  return calibrate_sliding(level, k, sample_chi2_limit(R, r, mc_count, seed, options), G);
}

inline nlohmann::json to_json(const DecisionReport& d) {
  nlohmann::json j;
  j["procedure"] = to_string(d.procedure);
  j["verdict"] = d.reject ? "reject" : "retain";
  j["witness"] = d.witness;
  j["lambda"] = d.lambda;
  j["xi"] = d.xi;
  j["alpha"] = d.alpha;
  j["c"] = d.c;
  j["k"] = d.k;
  j["G"] = d.G;
  j["level_estimate"] = d.level_estimate ? nlohmann::json(*d.level_estimate) : nlohmann::json();
  j["level_se"] = d.level_se;
  j["provenance"] = to_string(d.provenance);
  j["skipped"] = d.skipped;
  return j;
}

inline nlohmann::json to_json(const Calibration& c) {
  nlohmann::json j;
  j["procedure"] = to_string(c.procedure);
  j["target_level"] = c.target;
  j["alpha"] = c.alpha;
  j["c"] = c.c;
  j["achieved_level"] = c.achieved;
  j["level_se"] = c.se;
  j["method"] = to_string(c.method);
  j["mc_count"] = c.mc_count;
  j["seed"] = c.seed;
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& s : c.trace) trace.push_back({{"c", s.c}, {"level", s.level}});
  j["trace"] = std::move(trace);
  return j;
}

}  // namespace burstlr
