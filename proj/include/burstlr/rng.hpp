// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string_view>

namespace burstlr {

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

// SplitMix64 output finalizer (Stafford variant 13).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace detail

/*!
 * Counter-based splittable generator.
 *
 * Output n of a stream is mix64(key + (n + 1) * golden), i.e. a SplitMix64
 * sequence started at `key`. Keys are derived by hashing (seed, domain,
 * index), so every replication, draw or worker gets its own stream without
 * any shared state, and results never depend on how work is scheduled.
 */
class CounterRng {
 public:
  using result_type = std::uint64_t;

  static constexpr std::string_view kName = "splitmix64-ctr/v1";

  explicit CounterRng(std::uint64_t seed) noexcept : CounterRng(seed, 0, 0) {}

  CounterRng(std::uint64_t seed, std::uint64_t domain, std::uint64_t index) noexcept
      : key_(derive_key(seed, domain, index)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    ++counter_;
    return detail::mix64(key_ + counter_ * detail::kGolden);
  }

  // Independent child stream; does not advance this generator.
  CounterRng split(std::uint64_t index) const noexcept {
    CounterRng child(0);
    child.key_ = detail::mix64(key_ ^ detail::mix64(index + 0x632be59bd9b4e019ull));
    return child;
  }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t domain,
                                  std::uint64_t index) noexcept {
    std::uint64_t k = detail::mix64(seed + detail::kGolden);
    k = detail::mix64(k ^ detail::mix64(domain + 0xd1b54a32d192ed03ull));
    return detail::mix64(k ^ detail::mix64(index + 0x8cb92ba72f3d8dd7ull));
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Uniform on [0, 1) with 53 random bits.
inline double uniform01(CounterRng& rng) noexcept {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform on (0, 1].
inline double uniform_open_closed(CounterRng& rng) noexcept { return 1.0 - uniform01(rng); }

// Box-Muller; consumes two uniforms per call and discards the sine branch so
// each call is a pure function of the stream position.
inline double standard_normal(CounterRng& rng) noexcept {
  const double u1 = uniform_open_closed(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline double exponential(CounterRng& rng, double rate) noexcept {
  return -std::log(uniform_open_closed(rng)) / rate;
}

// Poisson variate: sequential inversion for small means, Hormann's PTRS
// transformed rejection otherwise.
inline std::uint64_t poisson(CounterRng& rng, double mean) {
  if (mean <= 0.0) return 0;
  if (mean < 10.0) {
    const double u = uniform01(rng);
    double p = std::exp(-mean);
    double cdf = p;
    std::uint64_t k = 0;
    while (u > cdf) {
      ++k;
      p *= mean / static_cast<double>(k);
      const double next = cdf + p;
      if (next == cdf) break;
      cdf = next;
    }
    return k;
  }
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = uniform01(rng) - 0.5;
    const double v = uniform01(rng);
    const double us = 0.5 - std::fabs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
        -mean + k * loglam - std::lgamma(k + 1.0)) {
      return static_cast<std::uint64_t>(k);
    }
  }
}

}  // namespace burstlr
