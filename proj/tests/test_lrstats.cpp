// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "burstlr/binning.hpp"
#include "burstlr/io.hpp"
#include "burstlr/lrstats.hpp"

using namespace burstlr;

namespace {

// One observation per entry of `xs`, spread evenly inside bin p.
std::vector<TimedObservation> in_bin(std::size_t p, const std::vector<double>& xs) {
  std::vector<TimedObservation> out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out.push_back({static_cast<double>(p - 1) + (static_cast<double>(i) + 1.0) / (xs.size() + 1.0), xs[i]});
  }
  return out;
}

BinnedDataset poisson_dataset(std::size_t P, std::size_t per_bin, double lambda, std::uint64_t seed) {
  CounterRng rng(seed);
  std::vector<TimedObservation> events;
  for (std::size_t p = 1; p <= P; ++p) {
    for (std::size_t i = 0; i < per_bin; ++i) {
      events.push_back({static_cast<double>(p - 1) + uniform_open_closed(rng),
                        static_cast<double>(poisson(rng, lambda))});
    }
  }
  return bin_observations(events, P);
}

}  // namespace

TEST(Binning, RightClosedBoundary) {
  const std::vector<TimedObservation> s{{0.5, 1}, {1.0, 2}, {1.5, 3}};
  const auto b = bin_observations(s, 2);
  ASSERT_EQ(b.bins.size(), 2u);
  EXPECT_EQ(b.bins[0], (std::vector<double>{1, 2}));
  EXPECT_EQ(b.bins[1], (std::vector<double>{3}));
  EXPECT_EQ(b.dropped(), 0u);
}

TEST(Binning, EmptyInput) {
  const auto b = bin_observations({}, 3);
  EXPECT_EQ(b.counts(), (std::vector<std::size_t>{0, 0, 0}));
  EXPECT_EQ(b.total(), 0u);
}

TEST(Binning, RightEndpointAndDrops) {
  const std::vector<TimedObservation> s{{2.0, 1}, {0.0, 2}, {-1.0, 3}, {2.0000001, 4}};
  const auto b = bin_observations(s, 2);
  EXPECT_EQ(b.bins[1], (std::vector<double>{1}));
  EXPECT_EQ(b.dropped_low, 2u);
  EXPECT_EQ(b.dropped_high, 1u);
  EXPECT_EQ(b.total() + b.dropped(), s.size());
}

TEST(Binning, ShiftOrigin) {
  const std::vector<TimedObservation> s{{1.2, 5}};
  const auto b = shift_origin(s, 0.5, 3);
  EXPECT_EQ(b.bins[0], (std::vector<double>{5}));
  const std::vector<TimedObservation> early{{0.3, 1}};
  EXPECT_EQ(shift_origin(early, 0.5, 3).dropped_low, 1u);
  EXPECT_THROW(shift_origin(s, 1.0, 3), ConfigError);
  EXPECT_THROW(shift_origin(s, -0.1, 3), ConfigError);
}

TEST(Binning, ShiftZeroIsIdentity) {
  CounterRng rng(8);
  std::vector<TimedObservation> s;
  for (int i = 0; i < 500; ++i) s.push_back({-1.0 + 8.0 * uniform01(rng), uniform01(rng)});
  const auto a = bin_observations(s, 6);
  const auto b = shift_origin(s, 0.0, 6);
  EXPECT_EQ(a.bins, b.bins);
  EXPECT_EQ(a.dropped_low, b.dropped_low);
  EXPECT_EQ(a.dropped_high, b.dropped_high);
}

TEST(Binning, PartitionAndPermutationInvariance) {
  CounterRng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t P = 1 + rng() % 10;
    std::vector<TimedObservation> s;
    const std::size_t n = rng() % 200;
    for (std::size_t i = 0; i < n; ++i) {
      // Land some exactly on integer boundaries.
      const double t = (rng() % 4 == 0) ? static_cast<double>(rng() % (P + 2))
                                        : -0.5 + (static_cast<double>(P) + 1.0) * uniform01(rng);
      s.push_back({t, static_cast<double>(i)});
    }
    const auto b = bin_observations(s, P);
    ASSERT_EQ(b.total() + b.dropped(), n);
    for (std::size_t p = 0; p < P; ++p) {
      for (double x : b.bins[p]) {
        const double t = s[static_cast<std::size_t>(x)].t;
        ASSERT_GT(t, static_cast<double>(p));
        ASSERT_LE(t, static_cast<double>(p + 1));
      }
    }
    auto shuffled = s;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    auto c = bin_observations(shuffled, P);
    auto sorted = b;
    for (auto& bin : sorted.bins) std::sort(bin.begin(), bin.end());
    for (auto& bin : c.bins) std::sort(bin.begin(), bin.end());
    ASSERT_EQ(sorted.bins, c.bins);
  }
}

TEST(WindowIndexing, Counts) {
  const WindowIndexing w(12, 4);
  EXPECT_EQ(w.M(), 9u);
  EXPECT_EQ(w.N(), 3u);
  EXPECT_THROW(WindowIndexing(7, 2).N(), ConfigError);
  EXPECT_EQ(WindowIndexing(7, 2).M(), 6u);
  EXPECT_THROW(WindowIndexing(3, 4), ConfigError);
  EXPECT_THROW(WindowIndexing(3, 0), ConfigError);
}

TEST(LambdaStandard, PoissonClosedForm) {
  // Ten observations with mean 3 against lambda0 = 2.
  const auto m = ParametricModel::poisson();
  const auto null = NullSpec::simple(m, 2.0);
  const auto data = bin_observations(in_bin(1, {3, 3, 3, 3, 3, 2, 4, 1, 5, 3}), 1);
  const auto lr = lambda_standard(data, m, null, 1);
  ASSERT_EQ(lr.size(), 1u);
  const double xi = 20.0 * (2.0 - 3.0 + 3.0 * std::log(1.5));
  EXPECT_NEAR(lr.windows[0].xi, xi, 1e-12);
  EXPECT_NEAR(lr.windows[0].xi, 4.3279, 1e-4);
  EXPECT_NEAR(lr.windows[0].lambda, std::exp(-xi / 2), 1e-14);
  EXPECT_NEAR(lr.windows[0].lambda, 0.11487, 1e-5);
}

TEST(LambdaStandard, NullAtMleGivesOne) {
  const auto m = ParametricModel::poisson();
  const auto null = NullSpec::simple(m, 2.0);
  const auto data = bin_observations(in_bin(1, {1, 2, 3}), 1);
  const auto lr = lambda_standard(data, m, null, 1);
  EXPECT_EQ(lr.windows[0].lambda, 1.0);
  EXPECT_EQ(lr.windows[0].xi, 0.0);
}

TEST(LambdaStandard, GaussianKnownVariance) {
  const auto m = ParametricModel::gaussian_known_variance(1.0);
  const auto null = NullSpec::simple(m, 0.0);
  // 25 observations with mean exactly 0.4.
  std::vector<double> xs(25, 0.4);
  xs[0] = 0.9;
  xs[1] = -0.1;
  const auto lr = lambda_standard(bin_observations(in_bin(1, xs), 1), m, null, 1);
  EXPECT_NEAR(lr.windows[0].xi, 4.0, 1e-12);
}

TEST(LambdaNew, Indexing) {
  const auto m = ParametricModel::poisson();
  const auto null = NullSpec::simple(m, 2.0);
  const auto data = poisson_dataset(4, 5, 2.0, 1);
  const auto lr = lambda_new(data, m, null, 2);
  ASSERT_EQ(lr.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(lr.windows[i].first_bin, i + 1);
    EXPECT_EQ(lr.windows[i].last_bin, i + 2);
    EXPECT_EQ(lr.windows[i].observations, 10u);
  }
  const auto single = lambda_new(data, m, null, 1);
  EXPECT_EQ(single.size(), 4u);
  EXPECT_EQ(single.windows[3].first_bin, single.windows[3].last_bin);
}

// Sliding windows at offsets 1, G + 1, ... reproduce the standard vector bit for bit.
TEST(LambdaNew, ContainsStandardBitExact) {
  CounterRng rng(31);
  const std::vector<ParametricModel> models{ParametricModel::poisson(), ParametricModel::gaussian_mean_variance(),
                                            ParametricModel::exponential()};
  for (int trial = 0; trial < 60; ++trial) {
    const auto& m = models[trial % models.size()];
    const std::size_t G = 1 + rng() % 4;
    const std::size_t P = G * (1 + rng() % 4);
    std::vector<TimedObservation> events;
    for (std::size_t p = 1; p <= P; ++p) {
      const std::size_t n = 2 + rng() % 30;
      for (std::size_t i = 0; i < n; ++i) {
        double x = 0;
        switch (m.family()) {
          case Family::Poisson: x = static_cast<double>(poisson(rng, 3.0)); break;
          case Family::Exponential: x = exponential(rng, 1.5); break;
          default: x = 1.0 + 2.0 * standard_normal(rng); break;
        }
        events.push_back({static_cast<double>(p - 1) + uniform_open_closed(rng), x});
      }
    }
    const auto data = bin_observations(events, P);
    const auto null = m.dimension() == 1 ? NullSpec::simple(m, m.family() == Family::Poisson ? 3.0 : 1.5)
                                         : NullSpec::make(m, {0}, {1.0});
    const auto st = lambda_standard(data, m, null, G);
    const auto sl = lambda_new(data, m, null, G);
    ASSERT_EQ(sl.size(), P - G + 1);
    for (std::size_t i = 0; i < st.size(); ++i) {
      const auto& a = st.windows[i];
      const auto& b = sl.windows[i * G];
      ASSERT_EQ(a.lambda, b.lambda);
      ASSERT_EQ(a.xi, b.xi);
      ASSERT_EQ(a.status, b.status);
    }
  }
}

TEST(LambdaNew, InvariantsOnRandomData) {
  CounterRng rng(41);
  const auto m = ParametricModel::gaussian_mean_variance();
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<TimedObservation> events;
    for (int i = 0; i < 120; ++i) events.push_back({6.0 * uniform_open_closed(rng), standard_normal(rng)});
    const auto data = bin_observations(events, 6);
    for (const auto& null : {NullSpec::make(m, {0}, {0.0}), NullSpec::make(m, {1}, {1.0})}) {
      const auto lr = lambda_new(data, m, null, 3);
      for (const auto& w : lr.windows) {
        ASSERT_FALSE(w.skipped());
        ASSERT_GT(w.lambda, 0.0);
        ASSERT_LE(w.lambda, 1.0);
        ASSERT_GE(w.xi, 0.0);
        ASSERT_NEAR(w.lambda, std::exp(-w.xi / 2), 1e-15);
      }
    }
  }
}

TEST(LambdaNew, PermutationWithinBinsLeavesLambdaUnchanged) {
  CounterRng rng(51);
  const auto m = ParametricModel::poisson();
  const auto null = NullSpec::simple(m, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    auto data = poisson_dataset(6, 25, 2.3, 100 + trial);
    const auto before = lambda_new(data, m, null, 3);
    for (auto& bin : data.bins) std::shuffle(bin.begin(), bin.end(), rng);
    const auto after = lambda_new(data, m, null, 3);
    for (std::size_t i = 0; i < before.size(); ++i) {
      ASSERT_NEAR(before.windows[i].lambda, after.windows[i].lambda, 1e-12 * before.windows[i].lambda);
    }
  }
}

TEST(LambdaNew, EmptyAndDegenerateWindowsAreSkipped) {
  const auto p = ParametricModel::poisson();
  auto events = in_bin(1, {1, 2});
  auto more = in_bin(4, {3});
  events.insert(events.end(), more.begin(), more.end());
  const auto data = bin_observations(events, 4);
  const auto lr = lambda_new(data, p, NullSpec::simple(p, 2.0), 1);
  EXPECT_EQ(lr.windows[1].status, WindowStatus::Empty);
  EXPECT_EQ(lr.windows[2].status, WindowStatus::Empty);
  EXPECT_EQ(lr.skipped_count(), 2u);
  EXPECT_EQ(lr.windows[1].lambda, 1.0);

  const auto zeros = bin_observations(in_bin(1, {0, 0, 0}), 1);
  EXPECT_EQ(lambda_new(zeros, p, NullSpec::simple(p, 2.0), 1).windows[0].status, WindowStatus::Degenerate);

  const auto g = ParametricModel::gaussian_mean_variance();
  const auto flat = bin_observations(in_bin(1, {2, 2, 2}), 1);
  EXPECT_EQ(lambda_new(flat, g, NullSpec::make(g, {0}, {0.0}), 1).windows[0].status,
            WindowStatus::Degenerate);
}

TEST(LambdaNew, SupportViolationIsFatal) {
  const auto p = ParametricModel::poisson();
  const auto data = bin_observations(in_bin(1, {1.5}), 1);
  EXPECT_THROW(lambda_new(data, p, NullSpec::simple(p, 2.0), 1), SupportError);
}

TEST(XiFromLambda, Examples) {
  const std::vector<double> lambda{1.0, std::exp(-2.0), std::exp(-0.5 * 4.327906)};
  const auto xi = xi_from_lambda(lambda);
  EXPECT_EQ(xi[0], 0.0);
  EXPECT_NEAR(xi[1], 4.0, 1e-14);
  EXPECT_NEAR(xi[2], 4.327906, 1e-12);
  const std::vector<double> bad_zero{0.0};
  const std::vector<double> bad_big{1.0 + 1e-9};
  EXPECT_THROW(xi_from_lambda(bad_zero), InvariantViolation);
  EXPECT_THROW(xi_from_lambda(bad_big), InvariantViolation);
}

TEST(Io, CsvRoundTrip) {
  const std::vector<TimedObservation> events{{0.1, 2}, {1.0 / 3.0, 0}, {7.999999999999, 12}};
  std::ostringstream os;
  write_events_csv(os, events);
  std::istringstream is(os.str());
  EXPECT_EQ(read_events_csv(is), events);
}

TEST(Io, CsvErrorsCarryLineNumbers) {
  std::istringstream bad("t,x\n0.5,1\n0.7,abc\n");
  try {
    read_events_csv(bad);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  std::istringstream fields("t,x\n1,2,3\n");
  EXPECT_THROW(read_events_csv(fields), ParseError);
  std::istringstream header("a,b\n1,2\n");
  EXPECT_THROW(read_events_csv(header), ParseError);
}

TEST(Io, JsonLines) {
  std::istringstream in("{\"t\": 0.5, \"x\": 3}\n\n{\"x\": 1, \"t\": 1.5}\n");
  const auto ev = read_events_jsonl(in);
  ASSERT_EQ(ev.size(), 2u);
  EXPECT_EQ(ev[1].t, 1.5);
  std::istringstream bad("{\"t\": 0.5}\n");
  EXPECT_THROW(read_events_jsonl(bad), ParseError);
}
