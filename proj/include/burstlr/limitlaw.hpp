// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "burstlr/csv.hpp"
#include "burstlr/error.hpp"
#include "burstlr/model.hpp"
#include "burstlr/parallel.hpp"
#include "burstlr/rng.hpp"
#include "burstlr/spacing.hpp"

namespace burstlr {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/*!
 * Correlation matrix of the sliding-window statistics, driven only by the
 * bin counts and the window length:
 *
 *   rho(i, j) = sum_{p = max(i,j)}^{min(i,j) + G - 1} n_p / sqrt(S_i S_j),  |i - j| < G
 *   rho(i, j) = 0,                                                         |i - j| >= G
 *
 * where S_i = n_i + ... + n_{i+G-1} is the size of window i. It is the
 * correlation of W_i = E_i + ... + E_{i+G-1} with independent E_p ~ N(0, n_p).
 */
struct CorrelationMatrix {
  std::size_t G = 0;
  std::vector<double> counts;
  Matrix rho;
  bool has_zero_counts = false;

  std::size_t M() const noexcept { return static_cast<std::size_t>(rho.rows()); }
  double operator()(std::size_t i, std::size_t j) const {
    return rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
};

inline CorrelationMatrix correlation_matrix(std::span<const double> counts, std::size_t G) {
  const std::size_t P = counts.size();
  if (G == 0 || G > P) throw ConfigError("correlation_matrix: require 1 <= G <= P");
  CorrelationMatrix out;
  out.G = G;
  out.counts.assign(counts.begin(), counts.end());
  for (double n : counts) {
    if (!(n >= 0.0) || !std::isfinite(n)) throw ConfigError("correlation_matrix: negative count");
    if (n == 0.0) out.has_zero_counts = true;
  }
  const std::size_t M = P - G + 1;
  std::vector<double> window(M, 0.0);
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t q = i; q < i + G; ++q) window[i] += counts[q];
    if (window[i] == 0.0) {
      throw DegenerateDataError("correlation_matrix: window " + std::to_string(i + 1) +
                                " has no observations");
    }
  }
  const auto m = static_cast<Eigen::Index>(M);
  out.rho = Matrix::Zero(m, m);
  for (std::size_t i = 0; i < M; ++i) {
    out.rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
    for (std::size_t j = i + 1; j < M && j - i < G; ++j) {
      double overlap = 0.0;
      for (std::size_t p = j; p <= i + G - 1; ++p) overlap += counts[p];
      const double v = overlap / std::sqrt(window[i] * window[j]);
      out.rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      out.rho(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  }
  return out;
}

inline CorrelationMatrix correlation_matrix(std::span<const std::size_t> counts, std::size_t G) {
  std::vector<double> c(counts.begin(), counts.end());
  return correlation_matrix(std::span<const double>(c), G);
}

// Lower Cholesky factor. On failure retries with diagonal jitter
// 1e-12 * mean(diag), escalating tenfold up to 1e-8 * mean(diag).
inline Matrix cholesky_with_jitter(const Matrix& a) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  const auto n = a.rows();
  const double scale = a.trace() / static_cast<double>(n);
  for (double eps = 1e-12; eps <= 1.000001e-8; eps *= 10.0) {
    llt.compute(a + eps * scale * Matrix::Identity(n, n));
    if (llt.info() == Eigen::Success) return llt.matrixL();
  }
  throw NumericalError("cholesky: matrix is not positive-definite");
}

enum class LimitKind { MleGaussian, Chi2Vector };

struct LimitSampleBatch {
  LimitKind kind = LimitKind::Chi2Vector;
  RowMatrix draws;  // one draw per row
  std::uint64_t seed = 0;
  std::string generator{CounterRng::kName};

  std::size_t count() const noexcept { return static_cast<std::size_t>(draws.rows()); }
  std::size_t width() const noexcept { return static_cast<std::size_t>(draws.cols()); }
  std::vector<double> column(std::size_t j) const {
    std::vector<double> out(count());
    for (std::size_t r = 0; r < count(); ++r) {
      out[r] = draws(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j));
    }
    return out;
  }
};

// Stream domains keep the samplers' random streams disjoint for one seed.
namespace stream_domain {
inline constexpr std::uint64_t kChi2 = 0x11;
inline constexpr std::uint64_t kChi2Oracle = 0x12;
inline constexpr std::uint64_t kMle = 0x13;
}  // namespace stream_domain

struct SamplerOptions {
  std::size_t threads = 1;  // 0 = hardware concurrency
};

/*!
 * Draws from the correlated chi-squared law with r degrees of freedom per
 * component: component i is sum_h Z_{h,i}^2, where for each h the vector
 * (Z_{h,1}, ..., Z_{h,M}) is N(0, R) and different h are independent.
 * One Cholesky factor of R is reused for all r copies.
 */
inline LimitSampleBatch sample_chi2_limit(const CorrelationMatrix& R, std::size_t r,
                                          std::size_t count, std::uint64_t seed,
                                          SamplerOptions options = {}) {
  if (r == 0) throw ConfigError("sample_chi2_limit: r must be at least 1");
  const Matrix L = cholesky_with_jitter(R.rho);
  const auto m = L.rows();
  LimitSampleBatch batch;
  batch.kind = LimitKind::Chi2Vector;
  batch.seed = seed;
  batch.draws = RowMatrix::Zero(static_cast<Eigen::Index>(count), m);
  parallel_for(count, options.threads, [&](std::size_t row) {
    CounterRng rng(seed, stream_domain::kChi2, row);
    Vector eps(m);
    auto out = batch.draws.row(static_cast<Eigen::Index>(row));
    for (std::size_t h = 0; h < r; ++h) {
      for (Eigen::Index i = 0; i < m; ++i) eps(i) = standard_normal(rng);
      const Vector z = L.triangularView<Eigen::Lower>() * eps;
      out += z.cwiseAbs2().transpose();
    }
  });
  return batch;
}

// H = [[0, 0], [0, G3^{-1}]] for the information matrix partitioned with the
// r constrained coordinates first; G3 is the (d - r) x (d - r) free block.
inline Matrix null_block_inverse(const Matrix& information, std::size_t r) {
  const auto d = information.rows();
  const auto rr = static_cast<Eigen::Index>(r);
  if (rr < 1 || rr > d) throw ConfigError("null_block_inverse: require 1 <= r <= d");
  Matrix h = Matrix::Zero(d, d);
  const auto s = d - rr;
  if (s == 0) return h;
  const Matrix g3 = information.bottomRightCorner(s, s);
  Eigen::FullPivLU<Matrix> lu(g3);
  if (!lu.isInvertible()) throw NumericalError("null_block_inverse: free information block is singular");
  h.bottomRightCorner(s, s) = lu.inverse();
  return h;
}

// Quadratic form t[Id - I H] I^{-1} [Id - I H]; algebraically I^{-1} - H.
inline Matrix chi2_quadratic_form(const Matrix& information, std::size_t r) {
  const auto d = information.rows();
  const Matrix h = null_block_inverse(information, r);
  const Matrix a = Matrix::Identity(d, d) - information * h;
  return a.transpose() * information.inverse() * a;
}

/*!
 * Independent route to the same law as sample_chi2_limit: draw
 * (G_1, ..., G_M) ~ N(0, R (x) I0) and return (t(G_i) Q G_i)_i with
 * Q = chi2_quadratic_form(I0, r). The r constrained coordinates are the
 * first r coordinates of I0.
 */
inline LimitSampleBatch sample_chi2_limit_oracle(const CorrelationMatrix& R, const Matrix& info,
                                                 std::size_t r, std::size_t count,
                                                 std::uint64_t seed, SamplerOptions options = {}) {
  if (info.rows() != info.cols()) throw ConfigError("oracle: information matrix must be square");
  const Matrix q = chi2_quadratic_form(info, r);
  const Matrix lr = cholesky_with_jitter(R.rho);
  const Matrix li = cholesky_with_jitter(info);
  const auto m = lr.rows();
  const auto d = info.rows();
  LimitSampleBatch batch;
  batch.kind = LimitKind::Chi2Vector;
  batch.seed = seed;
  batch.draws = RowMatrix::Zero(static_cast<Eigen::Index>(count), m);
  parallel_for(count, options.threads, [&](std::size_t row) {
    CounterRng rng(seed, stream_domain::kChi2Oracle, row);
    Matrix base(d, m);  // column j ~ N(0, I0), independent across j
    for (Eigen::Index j = 0; j < m; ++j) {
      Vector eps(d);
      for (Eigen::Index a = 0; a < d; ++a) eps(a) = standard_normal(rng);
      base.col(j) = li * eps;
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      Vector g = Vector::Zero(d);
      for (Eigen::Index j = 0; j <= i; ++j) g += lr(i, j) * base.col(j);
      batch.draws(static_cast<Eigen::Index>(row), i) = g.dot(q * g);
    }
  });
  return batch;
}

/*!
 * Draws of the dM-dimensional Gaussian limit of the scaled window MLEs,
 * covariance blocks rho(i, j) * I0^{-1}. Columns [i d, (i + 1) d) hold window i.
 */
inline LimitSampleBatch sample_mle_limit(const CorrelationMatrix& R, const Matrix& info_inverse,
                                         std::size_t count, std::uint64_t seed,
                                         SamplerOptions options = {}) {
  const Matrix lr = cholesky_with_jitter(R.rho);
  const Matrix li = cholesky_with_jitter(info_inverse);
  const auto m = lr.rows();
  const auto d = li.rows();
  LimitSampleBatch batch;
  batch.kind = LimitKind::MleGaussian;
  batch.seed = seed;
  batch.draws = RowMatrix::Zero(static_cast<Eigen::Index>(count), m * d);
  parallel_for(count, options.threads, [&](std::size_t row) {
    CounterRng rng(seed, stream_domain::kMle, row);
    Matrix base(d, m);
    for (Eigen::Index j = 0; j < m; ++j) {
      Vector eps(d);
      for (Eigen::Index a = 0; a < d; ++a) eps(a) = standard_normal(rng);
      base.col(j) = li * eps;
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      Vector g = Vector::Zero(d);
      for (Eigen::Index j = 0; j <= i; ++j) g += lr(i, j) * base.col(j);
      batch.draws.row(static_cast<Eigen::Index>(row)).segment(i * d, d) = g.transpose();
    }
  });
  return batch;
}

struct McEstimate {
  double estimate = 0.0;
  double se = 0.0;
  std::size_t count = 0;
};

inline McEstimate make_estimate(std::size_t hits, std::size_t count) {
  McEstimate out;
  out.count = count;
  if (count == 0) return out;
  const double p = static_cast<double>(hits) / static_cast<double>(count);
  out.estimate = p;
  out.se = std::sqrt(p * (1.0 - p) / static_cast<double>(count));
  return out;
}

// Whether a chi-squared draw has k components above c with index gaps >= G.
template <typename Row>
bool spaced_exceedance(const Row& draw, double c, std::size_t k, std::size_t G) {
  const auto n = static_cast<std::size_t>(draw.size());
  return spaced_witness(n, k, G, [&](std::size_t i) {
           return draw(static_cast<Eigen::Index>(i)) > c;
         }).has_value();
}

// Fraction of draws in `batch` on which the spaced-rejection event holds.
inline McEstimate rejection_probability(const LimitSampleBatch& batch, double c, std::size_t k,
                                        std::size_t G) {
  if (c < 0.0) throw ConfigError("rejection_probability: threshold must be >= 0");
  if (k == 0 || k > batch.width()) throw ConfigError("rejection_probability: require 1 <= k <= M");
  std::size_t hits = 0;
  for (Eigen::Index row = 0; row < batch.draws.rows(); ++row) {
    hits += spaced_exceedance(batch.draws.row(row), c, k, G) ? 1 : 0;
  }
  return make_estimate(hits, batch.count());
}

inline McEstimate rejection_probability(const CorrelationMatrix& R, std::size_t r, double c,
                                        std::size_t k, std::size_t G, std::size_t count,
                                        std::uint64_t seed, SamplerOptions options = {}) {
  return rejection_probability(sample_chi2_limit(R, r, count, seed, options), c, k, G);
}

inline void write_batch_csv(std::ostream& os, const LimitSampleBatch& batch) {
  {
    CsvRow header(os);
    for (std::size_t j = 0; j < batch.width(); ++j) header << ("c" + std::to_string(j + 1));
  }
  for (Eigen::Index row = 0; row < batch.draws.rows(); ++row) {
    CsvRow line(os);
    for (Eigen::Index j = 0; j < batch.draws.cols(); ++j) line << batch.draws(row, j);
  }
}

}  // namespace burstlr
