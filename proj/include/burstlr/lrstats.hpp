// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "burstlr/binning.hpp"
#include "burstlr/error.hpp"
#include "burstlr/model.hpp"

namespace burstlr {

// Window bookkeeping: M = P - G + 1 sliding windows; N = P / G disjoint
// windows when G divides P.
struct WindowIndexing {
  std::size_t P;
  std::size_t G;

  WindowIndexing(std::size_t P_, std::size_t G_) : P(P_), G(G_) {
    if (G == 0 || G > P) throw ConfigError("windows: require 1 <= G <= P");
  }

  std::size_t M() const noexcept { return P - G + 1; }
  bool divides() const noexcept { return P % G == 0; }
  std::size_t N() const {
    if (!divides()) throw ConfigError("windows: G does not divide P");
    return P / G;
  }
};

enum class LrKind { Standard, Sliding };

inline std::string_view to_string(LrKind kind) {
  return kind == LrKind::Standard ? "standard" : "sliding";
}

enum class WindowStatus { Ok, Empty, Degenerate, Nonconvergent };

inline std::string_view to_string(WindowStatus s) {
  switch (s) {
    case WindowStatus::Ok: return "ok";
    case WindowStatus::Empty: return "empty";
    case WindowStatus::Degenerate: return "degenerate";
    case WindowStatus::Nonconvergent: return "nonconvergent";
  }
  return "unknown";
}

// Statistics of one window. Skipped windows carry lambda = 1, xi = 0 and no MLEs.
struct WindowResult {
  std::size_t first_bin = 0;  // 1-based
  std::size_t last_bin = 0;   // 1-based, inclusive
  std::size_t observations = 0;
  WindowStatus status = WindowStatus::Ok;
  double lambda = 1.0;
  double xi = 0.0;
  std::optional<Parameter> full_mle;
  std::optional<Parameter> restricted_mle;
  bool clamped = false;

  bool skipped() const noexcept { return status != WindowStatus::Ok; }
};

struct LrVector {
  LrKind kind = LrKind::Sliding;
  std::size_t P = 0;
  std::size_t G = 0;
  std::vector<WindowResult> windows;

  std::size_t size() const noexcept { return windows.size(); }

  std::vector<double> lambda() const {
    std::vector<double> out;
    for (const auto& w : windows) out.push_back(w.lambda);
    return out;
  }
  std::vector<double> xi() const {
    std::vector<double> out;
    for (const auto& w : windows) out.push_back(w.xi);
    return out;
  }
  std::size_t skipped_count() const {
    std::size_t n = 0;
    for (const auto& w : windows) n += w.skipped() ? 1 : 0;
    return n;
  }
  std::size_t clamped_count() const {
    std::size_t n = 0;
    for (const auto& w : windows) n += w.clamped ? 1 : 0;
    return n;
  }
};

// Largest negative Xi attributed to solver rounding rather than a bug.
inline constexpr double kXiClampTolerance = 1e-7;

/*!
 * Likelihood-ratio statistic of the pooled observations of one window.
 *
 * Xi = 2 (l(full MLE) - l(restricted MLE)) is computed first and
 * Lambda = exp(-Xi / 2) derived from it, so large windows do not underflow.
 * Empty windows and data whose MLE leaves the domain are marked skipped.
 */
inline WindowResult window_statistic(const ParametricModel& model, const NullSpec& null,
                                     std::span<const double> pooled) {
  WindowResult out;
  out.observations = pooled.size();
  if (pooled.empty()) {
    out.status = WindowStatus::Empty;
    return out;
  }
  try {
    Parameter full = mle_full(model, pooled);
    Parameter restricted = mle_restricted(model, null, pooled);
    const double ll_full = detail::log_likelihood_unchecked(model, pooled, full);
    const double ll_restricted = detail::log_likelihood_unchecked(model, pooled, restricted);
    double xi = 2.0 * (ll_full - ll_restricted);
    if (xi < 0.0) {
      if (xi < -kXiClampTolerance) {
        throw InvariantViolation("restricted likelihood exceeds the unrestricted one (xi = " +
                                 std::to_string(xi) + ")");
      }
      xi = 0.0;
      out.clamped = true;
    }
    out.xi = xi;
    out.lambda = std::exp(-0.5 * xi);
    out.full_mle = std::move(full);
    out.restricted_mle = std::move(restricted);
  } catch (const DegenerateDataError&) {
    out.status = WindowStatus::Degenerate;
  } catch (const ConvergenceError&) {
    out.status = WindowStatus::Nonconvergent;
  }
  return out;
}

namespace detail {

inline void check_lr_inputs(const BinnedDataset& data, const ParametricModel& model,
                            const NullSpec& null) {
  if (null.dimension() != model.dimension()) {
    throw ConfigError("lr: null spec built for a different model");
  }
  for (const auto& bin : data.bins) {
    for (double x : bin) model.require_support(x);
  }
}

inline WindowResult window_at(const BinnedDataset& data, const ParametricModel& model,
                              const NullSpec& null, std::size_t first, std::size_t G) {
  const std::vector<double> pooled = data.pooled(first, G);
  WindowResult w = window_statistic(model, null, pooled);
  w.first_bin = first + 1;
  w.last_bin = first + G;
  return w;
}

}  // namespace detail

// Disjoint windows of bins (i - 1) G + 1 .. i G, i = 1..N.
inline LrVector lambda_standard(const BinnedDataset& data, const ParametricModel& model,
                                const NullSpec& null, std::size_t G) {
  const WindowIndexing idx(data.P, G);
  const std::size_t N = idx.N();
  detail::check_lr_inputs(data, model, null);
  LrVector out{LrKind::Standard, data.P, G, {}};
  out.windows.reserve(N);
  for (std::size_t i = 0; i < N; ++i) {
    out.windows.push_back(detail::window_at(data, model, null, i * G, G));
  }
  return out;
}

// Sliding windows of bins i .. i + G - 1, i = 1..M.
inline LrVector lambda_new(const BinnedDataset& data, const ParametricModel& model,
                           const NullSpec& null, std::size_t G) {
  const WindowIndexing idx(data.P, G);
  detail::check_lr_inputs(data, model, null);
  LrVector out{LrKind::Sliding, data.P, G, {}};
  out.windows.reserve(idx.M());
  for (std::size_t i = 0; i < idx.M(); ++i) {
    out.windows.push_back(detail::window_at(data, model, null, i, G));
  }
  return out;
}

inline std::vector<double> xi_from_lambda(std::span<const double> lambda) {
  std::vector<double> out;
  out.reserve(lambda.size());
  for (double l : lambda) {
    if (!(l > 0.0) || l > 1.0 + 1e-12) {
      throw InvariantViolation("xi_from_lambda: Lambda must lie in (0, 1], got " +
                               std::to_string(l));
    }
    out.push_back(l >= 1.0 ? 0.0 : -2.0 * std::log(l));
  }
  return out;
}

}  // namespace burstlr
