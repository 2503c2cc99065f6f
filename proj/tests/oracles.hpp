// SPDX-License-Identifier: Apache-2.0
// Independent reference computations shared by the unit and acceptance tests.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "burstlr/limitlaw.hpp"
#include "burstlr/stats.hpp"

namespace burstlr::oracle {

inline constexpr std::uint64_t kWDomain = 0x5701;

// Empirical correlation of W_i = E_i + ... + E_{i+G-1}, E_p ~ N(0, n_p)
// independent, from `draws` simulated vectors.
inline Matrix brute_force_correlation(const std::vector<double>& counts, std::size_t G,
                                      std::size_t draws, std::uint64_t seed) {
  const std::size_t P = counts.size();
  const std::size_t M = P - G + 1;
  RowMatrix w(static_cast<Eigen::Index>(draws), static_cast<Eigen::Index>(M));
  std::vector<double> e(P);
  for (std::size_t s = 0; s < draws; ++s) {
    CounterRng rng(seed, kWDomain, s);
    for (std::size_t p = 0; p < P; ++p) e[p] = std::sqrt(counts[p]) * standard_normal(rng);
    for (std::size_t i = 0; i < M; ++i) {
      double sum = 0.0;
      for (std::size_t p = i; p < i + G; ++p) sum += e[p];
      w(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(i)) = sum;
    }
  }
  return sample_correlation(w);
}

struct Comparison {
  std::size_t checked = 0;
  std::size_t exceed = 0;
  double worst_z = 0.0;
};

// Entries of `theory` with 0 < |i - j| < G against `empirical`, in units of
// the bivariate-normal standard error of a correlation estimate.
inline Comparison compare_in_band(const Matrix& theory, const Matrix& empirical, std::size_t G,
                                  std::size_t draws, double z_limit) {
  Comparison out;
  const auto M = theory.rows();
  for (Eigen::Index i = 0; i < M; ++i) {
    for (Eigen::Index j = i + 1; j < M && static_cast<std::size_t>(j - i) < G; ++j) {
      const double se = normal_correlation_se(theory(i, j), draws);
      const double z = std::fabs(empirical(i, j) - theory(i, j)) / se;
      ++out.checked;
      out.worst_z = std::max(out.worst_z, z);
      if (z > z_limit) ++out.exceed;
    }
  }
  return out;
}

// Symmetric positive-definite d x d matrix with a spread of eigenvalues.
inline Matrix random_spd(std::size_t d, CounterRng& rng) {
  const auto n = static_cast<Eigen::Index>(d);
  Matrix b(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) b(i, j) = standard_normal(rng);
  }
  return b * b.transpose() + (0.1 + uniform01(rng)) * Matrix::Identity(n, n);
}

// Counts in [1, max] with occasional large values so R is far from Toeplitz.
inline std::vector<double> random_counts(std::size_t P, CounterRng& rng, std::uint64_t max = 50) {
  std::vector<double> c(P);
  for (auto& n : c) n = static_cast<double>(1 + rng() % max) * (uniform01(rng) < 0.2 ? 10.0 : 1.0);
  return c;
}

struct BatchAgreement {
  double max_ks = 0.0;
  std::size_t pairs = 0;
  std::size_t exceed = 0;
  double worst_z = 0.0;
};

// Per-component two-sample KS and pairwise correlation differences between
// two independent chi-squared batches; correlation s.e. by the delta method.
inline BatchAgreement compare_batches(const LimitSampleBatch& a, const LimitSampleBatch& b,
                                      double z_limit) {
  BatchAgreement out;
  const std::size_t M = a.width();
  std::vector<std::vector<double>> ca(M), cb(M);
  for (std::size_t j = 0; j < M; ++j) {
    ca[j] = a.column(j);
    cb[j] = b.column(j);
    out.max_ks = std::max(out.max_ks, ks_two_sample(ca[j], cb[j]));
  }
  const Matrix ra = sample_correlation(a.draws);
  const Matrix rb = sample_correlation(b.draws);
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t j = i + 1; j < M; ++j) {
      const double se = std::hypot(correlation_se(ca[i], ca[j]), correlation_se(cb[i], cb[j]));
      const auto ii = static_cast<Eigen::Index>(i);
      const auto jj = static_cast<Eigen::Index>(j);
      const double z = std::fabs(ra(ii, jj) - rb(ii, jj)) / se;
      ++out.pairs;
      out.worst_z = std::max(out.worst_z, z);
      if (z > z_limit) ++out.exceed;
    }
  }
  return out;
}

}  // namespace burstlr::oracle
