// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace burstlr {

// Kolmogorov-Smirnov distance between the empirical CDF of `sample` and `cdf`.
template <typename Cdf>
double ks_one_sample(std::span<const double> sample, Cdf&& cdf) {
  if (sample.empty()) return 0.0;
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;  // ties share one jump
    const double f = cdf(sorted[i]);
    d = std::max({d, std::fabs(f - static_cast<double>(i) / n),
                  std::fabs(static_cast<double>(j) / n - f)});
    i = j;
  }
  return d;
}

// Two-sample Kolmogorov-Smirnov distance sup |F_a - F_b|.
inline double ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return 0.0;
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  return d;
}

// Column means and unbiased covariance of the rows of `x`.
template <typename Derived>
Eigen::MatrixXd sample_covariance(const Eigen::MatrixBase<Derived>& x) {
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean;
  return centered.transpose() * centered / static_cast<double>(x.rows() - 1);
}

inline Eigen::MatrixXd covariance_to_correlation(const Eigen::MatrixXd& cov) {
  const Eigen::VectorXd inv_sd = cov.diagonal().cwiseSqrt().cwiseInverse();
  return inv_sd.asDiagonal() * cov * inv_sd.asDiagonal();
}

template <typename Derived>
Eigen::MatrixXd sample_correlation(const Eigen::MatrixBase<Derived>& x) {
  return covariance_to_correlation(sample_covariance(x));
}

// Large-sample standard error of a Pearson correlation estimate for a
// bivariate normal pair with correlation rho.
inline double normal_correlation_se(double rho, std::size_t n) {
  return (1.0 - rho * rho) / std::sqrt(static_cast<double>(n));
}

// Delta-method standard error of the Pearson correlation of (a, b) that
// assumes no distributional form: the sample s.d. of the influence function
// uv - rho (u^2 + v^2) / 2 on standardized data, over sqrt(n).
inline double correlation_se(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  if (n != b.size() || n < 3) throw std::invalid_argument("correlation_se: need matching samples, n >= 3");
  const Eigen::Map<const Eigen::VectorXd> x(a.data(), static_cast<Eigen::Index>(n));
  const Eigen::Map<const Eigen::VectorXd> y(b.data(), static_cast<Eigen::Index>(n));
  const Eigen::VectorXd cx = x.array() - x.mean();
  const Eigen::VectorXd cy = y.array() - y.mean();
  const double nn = static_cast<double>(n);
  const Eigen::ArrayXd u = cx.array() / std::sqrt(cx.squaredNorm() / nn);
  const Eigen::ArrayXd v = cy.array() / std::sqrt(cy.squaredNorm() / nn);
  const double rho = (u * v).mean();
  const Eigen::ArrayXd inf = u * v - 0.5 * rho * (u.square() + v.square());
  const double var = (inf - inf.mean()).square().sum() / (nn - 1.0);
  return std::sqrt(var / nn);
}

// Standard error of a sample covariance for a bivariate normal pair.
inline double normal_covariance_se(double var_a, double var_b, double cov_ab, std::size_t n) {
  return std::sqrt((var_a * var_b + cov_ab * cov_ab) / static_cast<double>(n));
}

}  // namespace burstlr
