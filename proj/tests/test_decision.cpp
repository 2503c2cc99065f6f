// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>
#include <vector>

#include "burstlr/decision.hpp"

using namespace burstlr;

namespace {

LrVector make_lr(LrKind kind, const std::vector<double>& lambda, std::size_t G,
                 const std::vector<std::size_t>& skipped = {}) {
  LrVector lr{kind, 0, G, {}};
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    WindowResult w;
    w.lambda = lambda[i];
    w.xi = -2.0 * std::log(lambda[i]);
    for (std::size_t s : skipped) {
      if (s == i + 1) {
        w.status = WindowStatus::Empty;
        w.lambda = 1.0;
        w.xi = 0.0;
      }
    }
    lr.windows.push_back(w);
  }
  return lr;
}

CorrelationMatrix equal_counts(std::size_t P, std::size_t G) {
  const std::vector<double> c(P, 10.0);
  return correlation_matrix(std::span<const double>(c), G);
}

}  // namespace

TEST(Threshold, Conversions) {
  EXPECT_NEAR(threshold_from_alpha(std::exp(-2.0)), 4.0, 1e-14);
  EXPECT_NEAR(alpha_from_threshold(3.8415), 0.1465, 1e-4);
  EXPECT_THROW(threshold_from_alpha(0.0), ConfigError);
  EXPECT_THROW(threshold_from_alpha(1.0), ConfigError);
  EXPECT_EQ(parse_procedure("sliding"), Procedure::Sliding);
  EXPECT_THROW(parse_procedure("other"), ConfigError);
}

TEST(RejectStandard, CountsSubAlphaWindows) {
  const auto lr = make_lr(LrKind::Standard, {0.9, 0.03, 0.6, 0.01}, 2);
  const auto d = reject_standard(lr, 0.05, 2);
  EXPECT_TRUE(d.reject);
  EXPECT_EQ(d.witness, (std::vector<std::size_t>{2, 4}));
  EXPECT_EQ(d.provenance, LevelProvenance::None);
}

TEST(RejectStandard, KLargerThanNRetains) {
  const auto lr = make_lr(LrKind::Standard, {0.01, 0.01}, 1);
  EXPECT_FALSE(reject_standard(lr, 0.5, 3).reject);
}

TEST(RejectStandard, TiesRetain) {
  const auto lr = make_lr(LrKind::Standard, {0.05}, 1);
  const auto d = reject_standard(lr, 0.05, 1);
  EXPECT_FALSE(d.reject);
  EXPECT_TRUE(d.witness.empty());
}

TEST(RejectStandard, SkippedWindowsNeverCount) {
  const auto lr = make_lr(LrKind::Standard, {0.01, 0.01, 0.9}, 1, {1});
  const auto d = reject_standard(lr, 0.05, 2);
  EXPECT_FALSE(d.reject);
  EXPECT_EQ(d.skipped, (std::vector<std::size_t>{1}));
}

TEST(RejectStandard, KindAndKChecks) {
  const auto lr = make_lr(LrKind::Sliding, {0.5}, 1);
  EXPECT_THROW(reject_standard(lr, 0.05, 1), ConfigError);
  const auto st = make_lr(LrKind::Standard, {0.5}, 1);
  EXPECT_THROW(reject_standard(st, 0.05, 0), ConfigError);
  EXPECT_THROW(reject_new(st, 0.05, 1, 1), ConfigError);
}

TEST(RejectNew, SpacingExactlyG) {
  std::vector<double> l(7, 0.9);
  l[0] = l[3] = l[6] = 0.01;
  const auto d = reject_new(make_lr(LrKind::Sliding, l, 3), 0.05, 3, 3);
  EXPECT_TRUE(d.reject);
  EXPECT_EQ(d.witness, (std::vector<std::size_t>{1, 4, 7}));
}

TEST(RejectNew, TooCloseRetains) {
  std::vector<double> l(5, 0.9);
  l[1] = l[2] = 0.01;
  EXPECT_FALSE(reject_new(make_lr(LrKind::Sliding, l, 3), 0.05, 2, 3).reject);
}

TEST(RejectNew, WitnessPresentIffReject) {
  CounterRng rng(5);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t M = 1 + rng() % 12;
    const std::size_t G = 1 + rng() % 4;
    std::vector<double> l(M);
    for (auto& v : l) v = uniform01(rng) < 0.3 ? 0.01 : 0.5;
    const auto d = reject_new(make_lr(LrKind::Sliding, l, G), 0.05, 1 + rng() % 3, G);
    ASSERT_EQ(d.reject, !d.witness.empty());
    for (std::size_t j = 1; j < d.witness.size(); ++j) ASSERT_GE(d.witness[j] - d.witness[j - 1], G);
  }
}

// Lowering any Lambda never turns a rejection into a retention.
TEST(RejectNew, Monotone) {
  CounterRng rng(6);
  for (int trial = 0; trial < 3000; ++trial) {
    const std::size_t M = 1 + rng() % 12;
    const std::size_t G = 1 + rng() % 4;
    const std::size_t k = 1 + rng() % 3;
    const double alpha = 0.05 + 0.5 * uniform01(rng);
    std::vector<double> l(M);
    for (auto& v : l) v = uniform_open_closed(rng);
    const bool before = reject_new(make_lr(LrKind::Sliding, l, G), alpha, k, G).reject;
    l[rng() % M] *= uniform_open_closed(rng);
    const bool after = reject_new(make_lr(LrKind::Sliding, l, G), alpha, k, G).reject;
    ASSERT_TRUE(!before || after);
  }
}

// Standard windows sit at sliding indices 1, G + 1, ... with spacing exactly G.
TEST(RejectNew, IncludesStandardEvent) {
  CounterRng rng(7);
  for (int trial = 0; trial < 5000; ++trial) {
    const std::size_t G = 1 + rng() % 4;
    const std::size_t N = 1 + rng() % 4;
    const std::size_t P = N * G;
    const std::size_t M = P - G + 1;
    std::vector<double> sliding(M);
    for (auto& v : sliding) v = uniform_open_closed(rng);
    std::vector<double> standard;
    for (std::size_t i = 0; i < N; ++i) standard.push_back(sliding[i * G]);
    const double alpha = uniform_open_closed(rng) * 0.999;
    const std::size_t k = 1 + rng() % N;
    if (reject_standard(make_lr(LrKind::Standard, standard, G), alpha, k).reject) {
      ASSERT_TRUE(reject_new(make_lr(LrKind::Sliding, sliding, G), alpha, k, G).reject);
    }
  }
}

TEST(Type1Standard, BinomialExample) {
  // c chosen so that p_alpha = 0.05 exactly.
  boost::math::chi_squared chi1(1.0);
  const double c = boost::math::quantile(boost::math::complement(chi1, 0.05));
  const double alpha = alpha_from_threshold(c);
  EXPECT_NEAR(type1_standard(10, 1, alpha, 1), 1.0 - std::pow(0.95, 10), 1e-12);
  EXPECT_NEAR(type1_standard(10, 1, alpha, 1), 0.40126, 1e-5);
  EXPECT_NEAR(type1_standard(1, 1, alpha_from_threshold(3.8415), 1), 0.05, 1e-4);
  EXPECT_THROW(type1_standard(10, 0, alpha, 1), ConfigError);
}

TEST(Type1Standard, Monotonicity) {
  for (std::size_t r : {1u, 2u, 3u}) {
    for (std::size_t N = 1; N <= 8; ++N) {
      for (double alpha = 0.01; alpha < 0.99; alpha += 0.07) {
        for (std::size_t k = 1; k <= N; ++k) {
          const double base = type1_standard(N, k, alpha, r);
          if (k < N) {
            ASSERT_LE(type1_standard(N, k + 1, alpha, r), base + 1e-15);
          }
          ASSERT_GE(type1_standard(N + 1, k, alpha, r), base - 1e-15);
          ASSERT_GE(type1_standard(N, k, alpha + 0.05, r), base - 1e-15);
        }
      }
    }
  }
}

TEST(Type1New, IndependentCaseMatchesStandard) {
  const auto R = equal_counts(5, 1);
  for (std::size_t k : {1u, 2u}) {
    const auto est = type1_new(R, 1, 0.2, k, 1, 100000, 31);
    EXPECT_NEAR(est.estimate, type1_standard(5, k, 0.2, 1), 3.0 * est.se);
  }
}

TEST(Type1New, AlphaNearOneRejectsAlways) {
  const auto R = equal_counts(6, 2);
  EXPECT_GT(type1_new(R, 1, 1.0 - 1e-12, 1, 2, 5000, 32).estimate, 0.999);
}

TEST(Type1New, NonIncreasingInK) {
  const auto R = equal_counts(10, 3);
  double last = 1.0;
  for (std::size_t k = 1; k <= 3; ++k) {
    const double v = type1_new(R, 2, 0.3, k, 3, 20000, 33).estimate;
    EXPECT_LE(v, last);
    last = v;
  }
}

TEST(Calibrate, StandardSingleWindow) {
  const auto cal = calibrate_standard(0.05, 1, 1, 1);
  EXPECT_NEAR(cal.c, 3.841458820694124, 1e-8);
  EXPECT_NEAR(cal.alpha, 0.1465, 1e-4);
  EXPECT_NEAR(cal.achieved, 0.05, 1e-10);
  EXPECT_EQ(cal.method, LevelProvenance::Binomial);
  EXPECT_FALSE(cal.trace.empty());
}

TEST(Calibrate, StandardInvertsBinomial) {
  const auto cal = calibrate_standard(1.0 - std::pow(0.95, 10), 1, 10, 1);
  EXPECT_NEAR(chi2_sf(cal.c, 1.0), 0.05, 1e-9);
}

TEST(Calibrate, LevelValidation) {
  EXPECT_THROW(calibrate_standard(1.5, 1, 1, 1), ConfigError);
  EXPECT_THROW(calibrate_standard(0.0, 1, 1, 1), ConfigError);
  EXPECT_THROW(calibrate_sliding(1.5, 1, equal_counts(3, 1), 1, 1, 100, 1), ConfigError);
  // With k > N no threshold rejects at all.
  EXPECT_THROW(calibrate_standard(0.5, 4, 3, 1), CalibrationError);
}

TEST(Calibrate, SlidingWithUnitWindowsMatchesStandard) {
  const auto R = equal_counts(4, 1);
  const auto sliding = calibrate_sliding(0.05, 1, R, 1, 1, 200000, 41);
  const auto standard = calibrate_standard(0.05, 1, 4, 1);
  EXPECT_EQ(sliding.method, LevelProvenance::MonteCarlo);
  // Compare on the level scale: the exact size at the sliding threshold.
  const double exact_at_sliding = type1_standard(4, 1, sliding.alpha, 1);
  EXPECT_NEAR(exact_at_sliding, 0.05, 3.0 * std::sqrt(0.05 * 0.95 / 200000.0));
  EXPECT_NEAR(sliding.c, standard.c, 0.1);
}

TEST(Calibrate, SlidingIsReproducible) {
  const auto R = equal_counts(8, 4);
  const auto a = calibrate_sliding(0.05, 1, R, 1, 4, 20000, 51);
  const auto b = calibrate_sliding(0.05, 1, R, 1, 4, 20000, 51);
  EXPECT_EQ(a.c, b.c);
  EXPECT_EQ(a.trace.size(), b.trace.size());
  EXPECT_LE(std::fabs(a.achieved - 0.05), 2.0 * std::max(a.se, std::sqrt(0.05 * 0.95 / 20000.0)));
}

TEST(Json, DecisionReportFields) {
  auto d = reject_new(make_lr(LrKind::Sliding, {0.01, 0.5}, 1), 0.05, 1, 1);
  d.level_estimate = 0.05;
  d.provenance = LevelProvenance::MonteCarlo;
  const auto j = to_json(d);
  for (const char* key : {"verdict", "witness", "lambda", "xi", "alpha", "c", "k", "G", "level_estimate",
                          "level_se", "provenance", "skipped"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["verdict"], "reject");
  EXPECT_EQ(j["witness"], nlohmann::json::array({1}));
}
