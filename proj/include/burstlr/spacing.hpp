// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace burstlr {

/*!
 * Finds indices i_1 < ... < i_k in [0, n) with qualifies(i_j) true and
 * i_{j+1} - i_j >= spacing, picking the earliest qualifying index each time.
 *
 * Greedy selection is exact for existence: any valid k-subset can be shifted
 * left, element by element, onto the greedy choice without breaking spacing.
 */
template <typename Qualifies>
std::optional<std::vector<std::size_t>> spaced_witness(std::size_t n, std::size_t k,
                                                       std::size_t spacing, Qualifies&& qualifies) {
  std::vector<std::size_t> picked;
  if (k == 0) return picked;
  picked.reserve(k);
  std::size_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i < next || !qualifies(i)) continue;
    picked.push_back(i);
    if (picked.size() == k) return picked;
    next = i + spacing;
  }
  return std::nullopt;
}

}  // namespace burstlr
