// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "burstlr/error.hpp"
#include "burstlr/rng.hpp"

namespace burstlr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Family { Poisson, GaussianKnownVariance, GaussianMeanVariance, Exponential };

// A point of the parameter space. Whether it is admissible is a question for
// the model that interprets it.
struct Parameter {
  Vector values;

  Parameter() = default;
  explicit Parameter(Vector v) : values(std::move(v)) {}
  Parameter(std::initializer_list<double> v)
      : values(Eigen::Map<const Vector>(v.begin(), static_cast<Eigen::Index>(v.size()))) {}

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
  double operator[](std::size_t i) const { return values(static_cast<Eigen::Index>(i)); }
  double& operator[](std::size_t i) { return values(static_cast<Eigen::Index>(i)); }
  std::vector<double> to_vector() const { return {values.data(), values.data() + values.size()}; }

  friend bool operator==(const Parameter& a, const Parameter& b) {
    return a.values.size() == b.values.size() && a.values == b.values;
  }
};

/*!
 * A regular parametric family f(x; theta) on an open set of R^d.
 *
 * Parameterizations:
 *   Poisson                 theta = (lambda),   lambda > 0, x in {0, 1, ...}
 *   GaussianKnownVariance   theta = (mu),       sigma fixed at construction
 *   GaussianMeanVariance    theta = (mu, var),  var > 0
 *   Exponential             theta = (rate),     rate > 0, x >= 0
 *
 * Values are immutable after construction and safe to share across threads.
 */
class ParametricModel {
 public:
  static ParametricModel poisson() { return ParametricModel(Family::Poisson, 1.0); }
  static ParametricModel gaussian_known_variance(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
      throw ConfigError("gaussian_known_variance: sigma must be positive and finite");
    }
    return ParametricModel(Family::GaussianKnownVariance, sigma);
  }
  static ParametricModel gaussian_mean_variance() {
    return ParametricModel(Family::GaussianMeanVariance, 1.0);
  }
  static ParametricModel exponential() { return ParametricModel(Family::Exponential, 1.0); }

  Family family() const noexcept { return family_; }
  double sigma() const noexcept { return sigma_; }

  std::size_t dimension() const noexcept {
    return family_ == Family::GaussianMeanVariance ? 2 : 1;
  }

  std::string_view name() const noexcept {
    switch (family_) {
      case Family::Poisson: return "poisson";
      case Family::GaussianKnownVariance: return "gaussian-known-variance";
      case Family::GaussianMeanVariance: return "gaussian";
      case Family::Exponential: return "exponential";
    }
    return "unknown";
  }

  std::vector<std::string> parameter_names() const {
    switch (family_) {
      case Family::Poisson: return {"lambda"};
      case Family::GaussianKnownVariance: return {"mu"};
      case Family::GaussianMeanVariance: return {"mu", "var"};
      case Family::Exponential: return {"rate"};
    }
    return {};
  }

  // Whether a single coordinate value is admissible. The domains here are
  // products of intervals, so this decides membership coordinate-wise.
  bool coordinate_admissible(std::size_t index, double value) const noexcept {
    if (!std::isfinite(value)) return false;
    switch (family_) {
      case Family::Poisson:
      case Family::Exponential: return value > 0.0;
      case Family::GaussianKnownVariance: return true;
      case Family::GaussianMeanVariance: return index == 0 || value > 0.0;
    }
    return false;
  }

  bool in_domain(const Parameter& theta) const noexcept {
    if (theta.size() != dimension()) return false;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      if (!coordinate_admissible(i, theta[i])) return false;
    }
    return true;
  }

  bool in_support(double x) const noexcept {
    if (!std::isfinite(x)) return false;
    switch (family_) {
      case Family::Poisson: return x >= 0.0 && x == std::floor(x);
      case Family::Exponential: return x >= 0.0;
      default: return true;
    }
  }

  void require_domain(const Parameter& theta) const {
    if (!in_domain(theta)) {
      throw DomainError(std::string(name()) + ": parameter outside the domain");
    }
  }

  void require_support(double x) const {
    if (!in_support(x)) {
      throw SupportError(std::string(name()) + ": observation " + std::to_string(x) +
                         " outside the support");
    }
  }

  // log f(x; theta), without argument checks.
  double log_density_unchecked(double x, const Parameter& theta) const {
    switch (family_) {
      case Family::Poisson: {
        const double lambda = theta[0];
        return x * std::log(lambda) - lambda - std::lgamma(x + 1.0);
      }
      case Family::GaussianKnownVariance: {
        const double z = (x - theta[0]) / sigma_;
        return -0.5 * z * z - std::log(sigma_) - 0.5 * std::log(2.0 * std::numbers::pi);
      }
      case Family::GaussianMeanVariance: {
        const double d = x - theta[0];
        const double var = theta[1];
        return -0.5 * d * d / var - 0.5 * std::log(2.0 * std::numbers::pi * var);
      }
      case Family::Exponential: return std::log(theta[0]) - theta[0] * x;
    }
    return 0.0;
  }

  double log_density(double x, const Parameter& theta) const {
    require_domain(theta);
    require_support(x);
    return log_density_unchecked(x, theta);
  }

  Vector score_unchecked(double x, const Parameter& theta) const {
    Vector g(static_cast<Eigen::Index>(dimension()));
    switch (family_) {
      case Family::Poisson: g(0) = x / theta[0] - 1.0; break;
      case Family::GaussianKnownVariance: g(0) = (x - theta[0]) / (sigma_ * sigma_); break;
      case Family::GaussianMeanVariance: {
        const double d = x - theta[0];
        const double var = theta[1];
        g(0) = d / var;
        g(1) = -0.5 / var + 0.5 * d * d / (var * var);
        break;
      }
      case Family::Exponential: g(0) = 1.0 / theta[0] - x; break;
    }
    return g;
  }

  Vector score(double x, const Parameter& theta) const {
    require_domain(theta);
    require_support(x);
    return score_unchecked(x, theta);
  }

  // Hessian of log f(x; theta) with respect to theta.
  Matrix hessian(double x, const Parameter& theta) const {
    require_domain(theta);
    require_support(x);
    const auto d = static_cast<Eigen::Index>(dimension());
    Matrix h(d, d);
    switch (family_) {
      case Family::Poisson: h(0, 0) = -x / (theta[0] * theta[0]); break;
      case Family::GaussianKnownVariance: h(0, 0) = -1.0 / (sigma_ * sigma_); break;
      case Family::GaussianMeanVariance: {
        const double dx = x - theta[0];
        const double var = theta[1];
        h(0, 0) = -1.0 / var;
        h(0, 1) = h(1, 0) = -dx / (var * var);
        h(1, 1) = 0.5 / (var * var) - dx * dx / (var * var * var);
        break;
      }
      case Family::Exponential: h(0, 0) = -1.0 / (theta[0] * theta[0]); break;
    }
    return h;
  }

  Matrix fisher_information_unchecked(const Parameter& theta) const {
    const auto d = static_cast<Eigen::Index>(dimension());
    Matrix info = Matrix::Zero(d, d);
    switch (family_) {
      case Family::Poisson: info(0, 0) = 1.0 / theta[0]; break;
      case Family::GaussianKnownVariance: info(0, 0) = 1.0 / (sigma_ * sigma_); break;
      case Family::GaussianMeanVariance:
        info(0, 0) = 1.0 / theta[1];
        info(1, 1) = 0.5 / (theta[1] * theta[1]);
        break;
      case Family::Exponential: info(0, 0) = 1.0 / (theta[0] * theta[0]); break;
    }
    return info;
  }

  // Closed-form unrestricted MLE. Throws DegenerateDataError when the
  // supremum is approached only on the boundary of the domain.
  Parameter closed_form_mle(std::span<const double> data) const {
    const double n = static_cast<double>(data.size());
    double sum = 0.0;
    for (double x : data) sum += x;
    const double mean = sum / n;
    switch (family_) {
      case Family::Poisson:
        if (!(mean > 0.0)) throw DegenerateDataError("poisson: all observations are zero");
        return Parameter{mean};
      case Family::GaussianKnownVariance: return Parameter{mean};
      case Family::GaussianMeanVariance: {
        double ss = 0.0;
        for (double x : data) ss += (x - mean) * (x - mean);
        const double var = ss / n;
        if (!(var > 0.0)) throw DegenerateDataError("gaussian: zero sample variance");
        return Parameter{mean, var};
      }
      case Family::Exponential:
        if (!(mean > 0.0)) throw DegenerateDataError("exponential: all observations are zero");
        return Parameter{1.0 / mean};
    }
    return {};
  }

  // Method-of-moments starting point for iterative solvers. Always admissible.
  Parameter moment_estimate(std::span<const double> data) const {
    double sum = 0.0;
    double sq = 0.0;
    for (double x : data) {
      sum += x;
      sq += x * x;
    }
    const double n = std::max<double>(1.0, static_cast<double>(data.size()));
    const double mean = sum / n;
    const double var = std::max(sq / n - mean * mean, 0.0);
    switch (family_) {
      case Family::Poisson: return Parameter{std::max(mean, 1e-3)};
      case Family::GaussianKnownVariance: return Parameter{mean};
      case Family::GaussianMeanVariance: return Parameter{mean, std::max(var, 1e-6)};
      case Family::Exponential: return Parameter{1.0 / std::max(mean, 1e-6)};
    }
    return {};
  }

  double sample(CounterRng& rng, const Parameter& theta) const {
    switch (family_) {
      case Family::Poisson: return static_cast<double>(burstlr::poisson(rng, theta[0]));
      case Family::GaussianKnownVariance: return theta[0] + sigma_ * standard_normal(rng);
      case Family::GaussianMeanVariance:
        return theta[0] + std::sqrt(theta[1]) * standard_normal(rng);
      case Family::Exponential: return burstlr::exponential(rng, theta[0]);
    }
    return 0.0;
  }

 private:
  ParametricModel(Family family, double sigma) : family_(family), sigma_(sigma) {}

  Family family_;
  double sigma_;
};

/*!
 * Null hypothesis fixing r coordinates of theta at given values.
 *
 * Requires 1 <= r <= d - 1, except that a one-parameter family may fix its
 * only coordinate (a simple null with r = 1), which `is_simple()` reports.
 */
class NullSpec {
 public:
  static NullSpec make(const ParametricModel& model, std::vector<std::size_t> indices,
                       std::vector<double> values) {
    const std::size_t d = model.dimension();
    if (indices.size() != values.size()) {
      throw ConfigError("null: indices and values differ in length");
    }
    if (indices.empty()) throw ConfigError("null: must fix at least one coordinate");
    const bool simple = d == 1 && indices.size() == 1;
    if (indices.size() > d - 1 && !simple) {
      throw ConfigError("null: fixing all " + std::to_string(d) +
                        " coordinates leaves no free parameter (r must be <= d - 1)");
    }
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < indices.size(); ++i) order.push_back(i);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return indices[a] < indices[b]; });
    NullSpec out;
    for (std::size_t i : order) {
      if (indices[i] >= d) throw ConfigError("null: coordinate index out of range");
      if (!out.indices_.empty() && out.indices_.back() == indices[i]) {
        throw ConfigError("null: duplicate coordinate index");
      }
      if (!model.coordinate_admissible(indices[i], values[i])) {
        throw ConfigError("null: fixed value outside the parameter domain");
      }
      out.indices_.push_back(indices[i]);
      out.values_.push_back(values[i]);
    }
    out.dimension_ = d;
    out.simple_ = simple;
    return out;
  }

  // Simple null for a one-parameter family.
  static NullSpec simple(const ParametricModel& model, double value) {
    return make(model, {0}, {value});
  }

  const std::vector<std::size_t>& fixed_indices() const noexcept { return indices_; }
  const std::vector<double>& fixed_values() const noexcept { return values_; }
  std::size_t r() const noexcept { return indices_.size(); }
  std::size_t dimension() const noexcept { return dimension_; }
  bool is_simple() const noexcept { return simple_; }

  bool is_fixed(std::size_t index) const {
    return std::find(indices_.begin(), indices_.end(), index) != indices_.end();
  }

  std::vector<std::size_t> free_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < dimension_; ++i) {
      if (!is_fixed(i)) out.push_back(i);
    }
    return out;
  }

  // Overwrites the fixed coordinates of theta.
  Parameter project(Parameter theta) const {
    for (std::size_t i = 0; i < indices_.size(); ++i) theta[indices_[i]] = values_[i];
    return theta;
  }

 private:
  NullSpec() = default;

  std::vector<std::size_t> indices_;
  std::vector<double> values_;
  std::size_t dimension_ = 0;
  bool simple_ = false;
};

namespace detail {

inline void check_data(const ParametricModel& model, std::span<const double> data) {
  for (double x : data) model.require_support(x);
}

inline double log_likelihood_unchecked(const ParametricModel& model,
                                       std::span<const double> data, const Parameter& theta) {
  double sum = 0.0;
  for (double x : data) sum += model.log_density_unchecked(x, theta);
  return sum;
}

inline Vector score_sum_unchecked(const ParametricModel& model, std::span<const double> data,
                                  const Parameter& theta) {
  Vector g = Vector::Zero(static_cast<Eigen::Index>(model.dimension()));
  for (double x : data) g += model.score_unchecked(x, theta);
  return g;
}

}  // namespace detail

inline double log_likelihood(const ParametricModel& model, std::span<const double> data,
                             const Parameter& theta) {
  model.require_domain(theta);
  detail::check_data(model, data);
  return detail::log_likelihood_unchecked(model, data, theta);
}

inline Vector score(const ParametricModel& model, double x, const Parameter& theta) {
  return model.score(x, theta);
}

inline Vector score_sum(const ParametricModel& model, std::span<const double> data,
                        const Parameter& theta) {
  model.require_domain(theta);
  detail::check_data(model, data);
  return detail::score_sum_unchecked(model, data, theta);
}

inline Matrix fisher_information(const ParametricModel& model, const Parameter& theta) {
  model.require_domain(theta);
  return model.fisher_information_unchecked(theta);
}

struct SolverOptions {
  int max_iterations = 200;
  double gradient_tolerance = 1e-9;  // scaled by (1 + n)
  int max_halvings = 60;
};

/*!
 * Maximizes the log-likelihood over the coordinates left free by `null`
 * (all coordinates when `null` is empty) by Fisher scoring with a
 * backtracking line search on the log-likelihood.
 *
 * Converged when the free part of the score sum has Euclidean norm at most
 * gradient_tolerance * (1 + n).
 */
inline Parameter mle_fisher_scoring(const ParametricModel& model, std::span<const double> data,
                                    const NullSpec* null, Parameter start,
                                    const SolverOptions& options = {}) {
  if (data.empty()) throw ConfigError("mle: empty data");
  detail::check_data(model, data);
  const std::size_t d = model.dimension();
  std::vector<std::size_t> free;
  if (null != nullptr) {
    free = null->free_indices();
    start = null->project(std::move(start));
  } else {
    for (std::size_t i = 0; i < d; ++i) free.push_back(i);
  }
  model.require_domain(start);
  Parameter theta = std::move(start);
  if (free.empty()) return theta;

  const double n = static_cast<double>(data.size());
  const double tolerance = options.gradient_tolerance * (1.0 + n);
  const auto f = static_cast<Eigen::Index>(free.size());
  double loglik = detail::log_likelihood_unchecked(model, data, theta);

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const Vector full_grad = detail::score_sum_unchecked(model, data, theta);
    const Matrix info = model.fisher_information_unchecked(theta);
    Vector grad(f);
    Matrix hess(f, f);
    for (Eigen::Index a = 0; a < f; ++a) {
      grad(a) = full_grad(static_cast<Eigen::Index>(free[a]));
      for (Eigen::Index b = 0; b < f; ++b) {
        hess(a, b) = n * info(static_cast<Eigen::Index>(free[a]), static_cast<Eigen::Index>(free[b]));
      }
    }
    if (grad.norm() <= tolerance) return theta;
    const Vector step = hess.llt().solve(grad);

    double t = 1.0;
    bool accepted = false;
    for (int h = 0; h < options.max_halvings; ++h, t *= 0.5) {
      Parameter trial = theta;
      for (Eigen::Index a = 0; a < f; ++a) trial[free[a]] += t * step(a);
      if (!model.in_domain(trial)) continue;
      const double trial_loglik = detail::log_likelihood_unchecked(model, data, trial);
      if (trial_loglik >= loglik - 1e-12 * (1.0 + std::fabs(loglik))) {
        theta = std::move(trial);
        loglik = trial_loglik;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      throw ConvergenceError("mle: line search failed to improve the likelihood",
                             theta.to_vector());
    }
  }
  const Vector final_grad = detail::score_sum_unchecked(model, data, theta);
  double norm2 = 0.0;
  for (std::size_t i : free) {
    norm2 += final_grad(static_cast<Eigen::Index>(i)) * final_grad(static_cast<Eigen::Index>(i));
  }
  if (std::sqrt(norm2) <= tolerance) return theta;
  throw ConvergenceError("mle: no convergence within " +
                             std::to_string(options.max_iterations) + " iterations",
                         theta.to_vector());
}

// Unrestricted MLE over the whole domain.
inline Parameter mle_full(const ParametricModel& model, std::span<const double> data) {
  if (data.empty()) throw ConfigError("mle: empty data");
  detail::check_data(model, data);
  return model.closed_form_mle(data);
}

// MLE over the null set. Free coordinates start from the unrestricted MLE,
// or from moment estimates when that does not exist.
inline Parameter mle_restricted(const ParametricModel& model, const NullSpec& null,
                                std::span<const double> data,
                                const SolverOptions& options = {}) {
  if (data.empty()) throw ConfigError("mle: empty data");
  detail::check_data(model, data);
  if (null.dimension() != model.dimension()) {
    throw ConfigError("mle_restricted: null spec built for a different model");
  }
  Parameter start = [&] {
    try {
      return model.closed_form_mle(data);
    } catch (const DegenerateDataError&) {
      return model.moment_estimate(data);
    }
  }();
  start = null.project(std::move(start));
  if (null.is_simple()) return start;
  if (!model.in_domain(start)) start = null.project(model.moment_estimate(data));
  return mle_fisher_scoring(model, data, &null, std::move(start), options);
}

struct RegularityDiagnostics {
  bool valid = false;
  std::size_t samples = 0;
  double score_mean_norm = 0.0;          // |MC mean of score|
  double score_covariance_error = 0.0;   // max-abs of (MC cov of score - I(theta))
  double information_min_eigenvalue = 0.0;
  double hessian_error = 0.0;            // mean over draws of max |numeric - analytic Hessian|
  double information_hessian_error = 0.0;  // max-abs of (-MC mean Hessian - I(theta))
};

// Monte Carlo check of the differentiability and information identities at theta.
inline RegularityDiagnostics check_regularity(const ParametricModel& model,
                                              const Parameter& theta, std::size_t samples,
                                              std::uint64_t seed) {
  model.require_domain(theta);
  RegularityDiagnostics out;
  out.samples = samples;
  const Matrix info = model.fisher_information_unchecked(theta);
  out.information_min_eigenvalue =
      Eigen::SelfAdjointEigenSolver<Matrix>(info).eigenvalues().minCoeff();
  if (samples == 0) return out;

  const auto d = static_cast<Eigen::Index>(model.dimension());
  CounterRng rng(seed, 0x7265, 0);
  Vector mean = Vector::Zero(d);
  Matrix second = Matrix::Zero(d, d);
  Matrix hess_mean = Matrix::Zero(d, d);
  double hess_err = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const double x = model.sample(rng, theta);
    const Vector g = model.score_unchecked(x, theta);
    mean += g;
    second += g * g.transpose();
    const Matrix h = model.hessian(x, theta);
    hess_mean += h;
    // Central differences of the analytic score.
    double worst = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double step = 1e-6 * (1.0 + std::fabs(theta[static_cast<std::size_t>(j)]));
      Parameter up = theta;
      Parameter down = theta;
      up[static_cast<std::size_t>(j)] += step;
      down[static_cast<std::size_t>(j)] -= step;
      const Vector col = (model.score_unchecked(x, up) - model.score_unchecked(x, down)) / (2.0 * step);
      worst = std::max(worst, (col - h.col(j)).cwiseAbs().maxCoeff());
    }
    hess_err += worst;
  }
  const double n = static_cast<double>(samples);
  mean /= n;
  const Matrix cov = second / n - mean * mean.transpose();
  out.valid = true;
  out.score_mean_norm = mean.norm();
  out.score_covariance_error = (cov - info).cwiseAbs().maxCoeff();
  out.hessian_error = hess_err / n;
  out.information_hessian_error = (-hess_mean / n - info).cwiseAbs().maxCoeff();
  return out;
}

}  // namespace burstlr
