// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "burstlr/error.hpp"

namespace burstlr {

struct TimedObservation {
  double t = 0.0;  // in basic time units
  double x = 0.0;

  friend bool operator==(const TimedObservation&, const TimedObservation&) = default;
};

// P unit-time bins; bin p (1-based) holds observations with t in (p - 1, p].
struct BinnedDataset {
  std::size_t P = 0;
  std::vector<std::vector<double>> bins;
  std::size_t dropped_low = 0;   // t <= 0 (after any origin shift)
  std::size_t dropped_high = 0;  // t > P

  std::vector<std::size_t> counts() const {
    std::vector<std::size_t> out;
    out.reserve(bins.size());
    for (const auto& b : bins) out.push_back(b.size());
    return out;
  }

  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& b : bins) n += b.size();
    return n;
  }

  std::size_t dropped() const { return dropped_low + dropped_high; }

  // Observations of bins [first, first + length), 0-based, concatenated in bin order.
  std::vector<double> pooled(std::size_t first, std::size_t length) const {
    std::vector<double> out;
    std::size_t n = 0;
    for (std::size_t p = first; p < first + length; ++p) n += bins[p].size();
    out.reserve(n);
    for (std::size_t p = first; p < first + length; ++p) {
      out.insert(out.end(), bins[p].begin(), bins[p].end());
    }
    return out;
  }
};

namespace detail {

inline BinnedDataset bin_shifted(std::span<const TimedObservation> samples, double offset,
                                 std::size_t P) {
  if (P == 0) throw ConfigError("binning: P must be at least 1");
  BinnedDataset out;
  out.P = P;
  out.bins.resize(P);
  const double horizon = static_cast<double>(P);
  for (const auto& s : samples) {
    const double t = offset == 0.0 ? s.t : s.t - offset;
    if (!(t > 0.0)) {
      ++out.dropped_low;
    } else if (t > horizon) {
      ++out.dropped_high;
    } else {
      // t in (p - 1, p]  <=>  p = ceil(t)
      const auto p = static_cast<std::size_t>(std::ceil(t));
      out.bins[p - 1].push_back(s.x);
    }
  }
  return out;
}

}  // namespace detail

// Partitions samples into P unit bins (p - 1, p]; out-of-range samples are
// counted as dropped, not rejected.
inline BinnedDataset bin_observations(std::span<const TimedObservation> samples, std::size_t P) {
  return detail::bin_shifted(samples, 0.0, P);
}

// Bins by t' = t - offset, i.e. moves the origin of time to `offset`.
inline BinnedDataset shift_origin(std::span<const TimedObservation> samples, double offset,
                                  std::size_t P) {
  if (!(offset >= 0.0 && offset < 1.0)) throw ConfigError("shift_origin: offset must lie in [0, 1)");
  return detail::bin_shifted(samples, offset, P);
}

}  // namespace burstlr
