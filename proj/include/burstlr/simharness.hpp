// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "burstlr/binning.hpp"
#include "burstlr/decision.hpp"
#include "burstlr/error.hpp"
#include "burstlr/limitlaw.hpp"
#include "burstlr/lrstats.hpp"
#include "burstlr/model.hpp"
#include "burstlr/parallel.hpp"
#include "burstlr/rng.hpp"
#include "burstlr/special.hpp"
#include "burstlr/stats.hpp"

namespace burstlr {

// Interval (start, end] during which observations follow theta1.
struct Burst {
  double start = 0.0;
  double end = 0.0;
  Parameter theta1;

  double length() const noexcept { return end - start; }
  bool contains(double t) const noexcept { return t > start && t <= end; }
};

struct ScenarioSpec {
  ScenarioSpec(ParametricModel model_, Parameter theta0_, NullSpec null_,
               std::vector<std::size_t> counts_, std::size_t G_)
      : model(model_),
        theta0(std::move(theta0_)),
        null(std::move(null_)),
        counts(std::move(counts_)),
        P(counts.size()),
        G(G_) {}

  ParametricModel model;
  Parameter theta0;
  NullSpec null;
  std::vector<std::size_t> counts;  // n_p per bin, length P
  std::size_t P;
  std::size_t G;
  std::size_t k = 1;
  std::optional<double> alpha;
  std::optional<double> level;
  std::optional<Burst> burst;
  std::size_t replications = 2000;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::size_t mc_count = 100000;  // limit-law draws used for sliding calibration

  std::size_t r() const noexcept { return null.r(); }
  std::size_t M() const noexcept { return P - G + 1; }

  // The regime the sliding procedure targets: bursts shorter than G units.
  bool sub_window_burst() const noexcept {
    return burst && burst->length() < static_cast<double>(G);
  }

  void validate() const {
    if (P == 0) throw ConfigError("scenario: P must be at least 1");
    if (G == 0 || G > P) throw ConfigError("scenario: require 1 <= G <= P");
    if (k == 0) throw ConfigError("scenario: k must be at least 1");
    model.require_domain(theta0);
    if (null.dimension() != model.dimension()) {
      throw ConfigError("scenario: null spec built for a different model");
    }
    if (burst) model.require_domain(burst->theta1);
  }
};

namespace stream_domain {
inline constexpr std::uint64_t kEventsH0 = 0x21;
inline constexpr std::uint64_t kEventsBurst = 0x22;
inline constexpr std::uint64_t kCalibration = 0x23;
}  // namespace stream_domain

namespace detail {

inline std::vector<TimedObservation> generate_events(const ScenarioSpec& spec,
                                                     std::size_t horizon,
                                                     const Burst* burst,
                                                     std::uint64_t domain,
                                                     std::size_t replication) {
  CounterRng rng(spec.seed, domain, replication);
  std::vector<TimedObservation> out;
  for (std::size_t p = 1; p <= horizon; ++p) {
    const std::size_t n = spec.counts[std::min(p, spec.P) - 1];
    for (std::size_t j = 0; j < n; ++j) {
      const double t = static_cast<double>(p - 1) + uniform_open_closed(rng);
      const Parameter& theta = burst != nullptr && burst->contains(t) ? burst->theta1 : spec.theta0;
      out.push_back({t, spec.model.sample(rng, theta)});
    }
  }
  return out;
}

inline void check_burst(const ScenarioSpec& spec) {
  if (!spec.burst) throw ConfigError("scenario: no burst configured");
  const Burst& b = *spec.burst;
  if (!(b.end > b.start)) throw ConfigError("burst: empty interval");
  if (b.start < 0.0 || b.end > static_cast<double>(spec.P)) {
    throw ConfigError("burst: interval must lie within (0, P]");
  }
}

}  // namespace detail

// Timestamped draws under theta0 on (0, horizon]; bin p gets counts[p] draws
// (counts beyond P repeat the last entry) with uniform timestamps.
inline std::vector<TimedObservation> generate_h0_events(const ScenarioSpec& spec,
                                                        std::size_t replication,
                                                        std::size_t horizon = 0) {
  return detail::generate_events(spec, horizon == 0 ? spec.P : horizon, nullptr,
                                 stream_domain::kEventsH0, replication);
}

// As generate_h0_events, but draws whose timestamp falls inside the burst
// interval come from theta1.
inline std::vector<TimedObservation> generate_burst_events(const ScenarioSpec& spec,
                                                           std::size_t replication,
                                                           std::size_t horizon = 0) {
  detail::check_burst(spec);
  return detail::generate_events(spec, horizon == 0 ? spec.P : horizon, &*spec.burst,
                                 stream_domain::kEventsBurst, replication);
}

inline BinnedDataset generate_h0(const ScenarioSpec& spec, std::size_t replication = 0) {
  const auto events = generate_h0_events(spec, replication);
  return bin_observations(events, spec.P);
}

inline BinnedDataset generate_burst(const ScenarioSpec& spec, std::size_t replication = 0) {
  const auto events = generate_burst_events(spec, replication);
  return bin_observations(events, spec.P);
}

// 1-based index of the standard window fully containing (start, end] when
// the origin of time sits at `offset`, if any.
inline std::optional<std::size_t> standard_window_containing(double start, double end,
                                                             std::size_t G, std::size_t P,
                                                             double offset = 0.0) {
  const double g = static_cast<double>(G);
  for (std::size_t i = 1; i * G <= P; ++i) {
    const double lo = offset + static_cast<double>(i - 1) * g;
    const double hi = offset + static_cast<double>(i) * g;
    if (start >= lo && end <= hi) return i;
  }
  return std::nullopt;
}

// 1-based index of the first sliding window (bins i..i+G-1) fully containing (start, end].
inline std::optional<std::size_t> sliding_window_containing(double start, double end,
                                                            std::size_t G, std::size_t P,
                                                            double offset = 0.0) {
  for (std::size_t i = 1; i + G - 1 <= P; ++i) {
    const double lo = offset + static_cast<double>(i - 1);
    const double hi = lo + static_cast<double>(G);
    if (start >= lo && end <= hi) return i;
  }
  return std::nullopt;
}

struct Theorem2Check {
  std::size_t r = 0;
  std::vector<double> ks;  // per window, empirical Xi_i vs chi2_r
  double ks_tolerance = 0.0;
  double max_ks = 0.0;
  Matrix corr_empirical;
  Matrix corr_theory;  // rho(i, j)^2
  double max_corr_error_near = 0.0;  // pairs with 0 < |i - j| < G
  double max_corr_error_far = 0.0;   // pairs with |i - j| >= G
  double corr_tolerance_near = 0.05;
  double corr_tolerance_far = 0.0;

  bool pass() const {
    return max_ks <= ks_tolerance && max_corr_error_near <= corr_tolerance_near &&
           max_corr_error_far <= corr_tolerance_far;
  }
};

struct Theorem1Check {
  Matrix cov_empirical;  // dM x dM
  Matrix cov_theory;     // blocks rho(i, j) I(theta0)^{-1}
  Matrix block_frobenius;  // M x M
  double max_z = 0.0;    // worst |empirical - theory| / s.e. over all entries
  double z_tolerance = 3.0;

  bool pass() const { return max_z <= z_tolerance; }
};

struct ValidationReport {
  std::uint64_t seed = 0;
  std::size_t replications = 0;
  std::size_t used = 0;
  std::size_t excluded = 0;
  double exclusion_rate = 0.0;
  double max_exclusion_rate = 0.01;
  std::optional<Theorem2Check> theorem2;
  std::optional<Theorem1Check> theorem1;

  bool pass() const {
    return exclusion_rate <= max_exclusion_rate && (!theorem2 || theorem2->pass()) &&
           (!theorem1 || theorem1->pass());
  }
};

namespace detail {

struct H0Statistics {
  RowMatrix xi;      // used replications x M
  RowMatrix scaled;  // used replications x dM, sqrt(S_i) (theta_hat_i - theta0)
  std::size_t excluded = 0;
};

inline H0Statistics simulate_h0_statistics(const ScenarioSpec& spec, std::size_t replications) {
  spec.validate();
  const std::size_t M = spec.M();
  const std::size_t d = spec.model.dimension();
  std::vector<std::optional<std::vector<double>>> xi(replications);
  std::vector<std::vector<double>> scaled(replications);
  parallel_for(replications, spec.threads, [&](std::size_t rep) {
    const BinnedDataset data = generate_h0(spec, rep);
    const LrVector lr = lambda_new(data, spec.model, spec.null, spec.G);
    if (lr.skipped_count() > 0) return;
    std::vector<double> dev;
    dev.reserve(M * d);
    for (const auto& w : lr.windows) {
      const double root = std::sqrt(static_cast<double>(w.observations));
      for (std::size_t a = 0; a < d; ++a) dev.push_back(root * ((*w.full_mle)[a] - spec.theta0[a]));
    }
    xi[rep] = lr.xi();
    scaled[rep] = std::move(dev);
  });
  H0Statistics out;
  std::size_t used = 0;
  for (const auto& x : xi) used += x ? 1 : 0;
  out.excluded = replications - used;
  out.xi.resize(static_cast<Eigen::Index>(used), static_cast<Eigen::Index>(M));
  out.scaled.resize(static_cast<Eigen::Index>(used), static_cast<Eigen::Index>(M * d));
  Eigen::Index row = 0;
  for (std::size_t rep = 0; rep < replications; ++rep) {
    if (!xi[rep]) continue;
    for (std::size_t i = 0; i < M; ++i) out.xi(row, static_cast<Eigen::Index>(i)) = (*xi[rep])[i];
    for (std::size_t i = 0; i < M * d; ++i) {
      out.scaled(row, static_cast<Eigen::Index>(i)) = scaled[rep][i];
    }
    ++row;
  }
  return out;
}

inline CorrelationMatrix nominal_correlation(const ScenarioSpec& spec) {
  return correlation_matrix(std::span<const std::size_t>(spec.counts), spec.G);
}

inline Theorem2Check summarize_theorem2(const ScenarioSpec& spec, const H0Statistics& stats) {
  Theorem2Check out;
  out.r = spec.r();
  const auto used = static_cast<std::size_t>(stats.xi.rows());
  const auto M = static_cast<Eigen::Index>(spec.M());
  out.ks_tolerance = 1.36 / std::sqrt(static_cast<double>(used)) + 0.01;
  out.corr_tolerance_far = 3.0 / std::sqrt(static_cast<double>(used));
  const double dof = static_cast<double>(out.r);
  for (Eigen::Index i = 0; i < M; ++i) {
    const Eigen::VectorXd col = stats.xi.col(i);
    const double ks = ks_one_sample(std::span<const double>(col.data(), used),
                                    [dof](double x) { return chi2_cdf(x, dof); });
    out.ks.push_back(ks);
    out.max_ks = std::max(out.max_ks, ks);
  }
  const CorrelationMatrix R = nominal_correlation(spec);
  out.corr_theory = R.rho.cwiseAbs2();
  out.corr_empirical = sample_correlation(stats.xi);
  for (Eigen::Index i = 0; i < M; ++i) {
    for (Eigen::Index j = i + 1; j < M; ++j) {
      const double err = std::fabs(out.corr_empirical(i, j) - out.corr_theory(i, j));
      if (static_cast<std::size_t>(j - i) < spec.G) {
        out.max_corr_error_near = std::max(out.max_corr_error_near, err);
      } else {
        out.max_corr_error_far = std::max(out.max_corr_error_far, err);
      }
    }
  }
  return out;
}

inline Theorem1Check summarize_theorem1(const ScenarioSpec& spec, const H0Statistics& stats) {
  Theorem1Check out;
  const auto used = static_cast<std::size_t>(stats.scaled.rows());
  const auto M = static_cast<Eigen::Index>(spec.M());
  const auto d = static_cast<Eigen::Index>(spec.model.dimension());
  const CorrelationMatrix R = nominal_correlation(spec);
  const Matrix info_inv = fisher_information(spec.model, spec.theta0).inverse();
  out.cov_theory = Matrix::Zero(M * d, M * d);
  for (Eigen::Index i = 0; i < M; ++i) {
    for (Eigen::Index j = 0; j < M; ++j) {
      out.cov_theory.block(i * d, j * d, d, d) = R.rho(i, j) * info_inv;
    }
  }
  out.cov_empirical = sample_covariance(stats.scaled);
  out.block_frobenius = Matrix::Zero(M, M);
  for (Eigen::Index i = 0; i < M; ++i) {
    for (Eigen::Index j = 0; j < M; ++j) {
      out.block_frobenius(i, j) =
          (out.cov_empirical.block(i * d, j * d, d, d) - out.cov_theory.block(i * d, j * d, d, d))
              .norm();
    }
  }
  for (Eigen::Index a = 0; a < M * d; ++a) {
    for (Eigen::Index b = a; b < M * d; ++b) {
      const double se = normal_covariance_se(out.cov_theory(a, a), out.cov_theory(b, b),
                                             out.cov_theory(a, b), used);
      out.max_z = std::max(out.max_z, std::fabs(out.cov_empirical(a, b) - out.cov_theory(a, b)) / se);
    }
  }
  return out;
}

inline ValidationReport make_validation_report(const ScenarioSpec& spec, std::size_t replications,
                                               const H0Statistics& stats) {
  ValidationReport out;
  out.seed = spec.seed;
  out.replications = replications;
  out.excluded = stats.excluded;
  out.used = replications - stats.excluded;
  out.exclusion_rate =
      replications == 0 ? 0.0 : static_cast<double>(stats.excluded) / static_cast<double>(replications);
  if (out.used < 2) throw NumericalError("validation: fewer than two usable replications");
  return out;
}

}  // namespace detail

// Joint law of (Xi_1, ..., Xi_M) under H0 against the correlated chi-squared limit.
inline ValidationReport validate_theorem2(const ScenarioSpec& spec, std::size_t replications) {
  const auto stats = detail::simulate_h0_statistics(spec, replications);
  ValidationReport out = detail::make_validation_report(spec, replications, stats);
  out.theorem2 = detail::summarize_theorem2(spec, stats);
  return out;
}

// Covariance of the scaled window MLEs under H0 against blocks rho(i, j) I(theta0)^{-1}.
inline ValidationReport validate_theorem1(const ScenarioSpec& spec, std::size_t replications) {
  const auto stats = detail::simulate_h0_statistics(spec, replications);
  ValidationReport out = detail::make_validation_report(spec, replications, stats);
  out.theorem1 = detail::summarize_theorem1(spec, stats);
  return out;
}

// Both checks from one set of simulated datasets.
inline ValidationReport validate_limit_laws(const ScenarioSpec& spec, std::size_t replications) {
  const auto stats = detail::simulate_h0_statistics(spec, replications);
  ValidationReport out = detail::make_validation_report(spec, replications, stats);
  out.theorem2 = detail::summarize_theorem2(spec, stats);
  out.theorem1 = detail::summarize_theorem1(spec, stats);
  return out;
}

enum class ThresholdMode { EqualAlpha, Calibrated };

inline std::string_view to_string(ThresholdMode m) {
  return m == ThresholdMode::EqualAlpha ? "equal-alpha" : "calibrated";
}

struct PowerRow {
  double offset = 0.0;
  Procedure procedure = Procedure::Standard;
  ThresholdMode mode = ThresholdMode::EqualAlpha;
  bool under_h0 = false;
  double alpha = 0.0;
  McEstimate power;
};

struct PowerTable {
  std::uint64_t seed = 0;
  std::size_t replications = 0;
  double equal_alpha = 0.0;
  double target_level = 0.0;
  Calibration standard_calibration;
  Calibration sliding_calibration;
  std::vector<PowerRow> rows;
  // Replications where the standard procedure rejected at the common alpha
  // but the sliding one did not; zero whenever G divides P.
  std::size_t inclusion_violations = 0;

  const PowerRow& find(double offset, Procedure p, ThresholdMode m, bool under_h0) const {
    for (const auto& row : rows) {
      if (row.offset == offset && row.procedure == p && row.mode == m && row.under_h0 == under_h0) {
        return row;
      }
    }
    throw ConfigError("power table: no such row");
  }
};

/*!
 * Rejection rates of both procedures for each origin offset, on burst data
 * and on H0 data, at a common alpha and at size-calibrated thresholds.
 *
 * Events are generated on (0, P + 1] once per replication and re-binned for
 * every offset, so offsets are compared on common random numbers. The
 * sliding calibration uses the limit law for the nominal counts.
 */
inline PowerTable power_comparison(const ScenarioSpec& spec, std::span<const double> offsets) {
  spec.validate();
  detail::check_burst(spec);
  const WindowIndexing windows(spec.P, spec.G);
  const std::size_t N = windows.N();
  const std::size_t r = spec.r();
  if (!spec.alpha && !spec.level) throw ConfigError("power: need alpha or a target level");
  for (double o : offsets) {
    if (!(o >= 0.0 && o < 1.0)) throw ConfigError("power: offsets must lie in [0, 1)");
  }

  PowerTable table;
  table.seed = spec.seed;
  table.replications = spec.replications;
  table.target_level = spec.level ? *spec.level : type1_standard(N, spec.k, *spec.alpha, r);
  table.standard_calibration = calibrate_standard(table.target_level, spec.k, N, r);
  const CorrelationMatrix R = detail::nominal_correlation(spec);
  table.sliding_calibration =
      calibrate_sliding(table.target_level, spec.k, R, r, spec.G, spec.mc_count,
                        CounterRng(spec.seed, stream_domain::kCalibration, 0)(),
                        SamplerOptions{spec.threads});
  table.equal_alpha = spec.alpha ? *spec.alpha : table.standard_calibration.alpha;

  struct Cell {
    bool std_equal, new_equal, std_cal, new_cal;
  };
  const std::size_t n_off = offsets.size();
  // [rep][scenario][offset]
  std::vector<Cell> cells(spec.replications * 2 * n_off);
  const double a_eq = table.equal_alpha;
  const double a_std = table.standard_calibration.alpha;
  const double a_new = table.sliding_calibration.alpha;
  parallel_for(spec.replications, spec.threads, [&](std::size_t rep) {
    for (int scenario = 0; scenario < 2; ++scenario) {
      const auto events = scenario == 0 ? generate_burst_events(spec, rep, spec.P + 1)
                                        : generate_h0_events(spec, rep, spec.P + 1);
      for (std::size_t o = 0; o < n_off; ++o) {
        const BinnedDataset data = shift_origin(events, offsets[o], spec.P);
        const LrVector st = lambda_standard(data, spec.model, spec.null, spec.G);
        const LrVector sl = lambda_new(data, spec.model, spec.null, spec.G);
        cells[(rep * 2 + static_cast<std::size_t>(scenario)) * n_off + o] = {
            reject_standard(st, a_eq, spec.k).reject, reject_new(sl, a_eq, spec.k, spec.G).reject,
            reject_standard(st, a_std, spec.k).reject, reject_new(sl, a_new, spec.k, spec.G).reject};
      }
    }
  });

  for (int scenario = 0; scenario < 2; ++scenario) {
    for (std::size_t o = 0; o < n_off; ++o) {
      std::size_t hits[4] = {0, 0, 0, 0};
      for (std::size_t rep = 0; rep < spec.replications; ++rep) {
        const Cell& c = cells[(rep * 2 + static_cast<std::size_t>(scenario)) * n_off + o];
        hits[0] += c.std_equal;
        hits[1] += c.new_equal;
        hits[2] += c.std_cal;
        hits[3] += c.new_cal;
        if (c.std_equal && !c.new_equal) ++table.inclusion_violations;
      }
      const bool h0 = scenario == 1;
      const double off = offsets[o];
      table.rows.push_back({off, Procedure::Standard, ThresholdMode::EqualAlpha, h0, a_eq,
                            make_estimate(hits[0], spec.replications)});
      table.rows.push_back({off, Procedure::Sliding, ThresholdMode::EqualAlpha, h0, a_eq,
                            make_estimate(hits[1], spec.replications)});
      table.rows.push_back({off, Procedure::Standard, ThresholdMode::Calibrated, h0, a_std,
                            make_estimate(hits[2], spec.replications)});
      table.rows.push_back({off, Procedure::Sliding, ThresholdMode::Calibrated, h0, a_new,
                            make_estimate(hits[3], spec.replications)});
    }
  }
  return table;
}

}  // namespace burstlr
