// Copyright 2026 The abcloss Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ABCLOSS_HILBERT_HPP
#define ABCLOSS_HILBERT_HPP

#include <cstdint>
#include <stdexcept>
#include <utility>

/**
 * \file
 * \brief Two-dimensional Hilbert curve on a 2^k x 2^k grid.
 *
 * Uses the iterative rotate/reflect construction. The curve starts at (0, 0)
 * and consecutive indices are always grid neighbours.
 */

namespace abcloss {

/// A cell of the 2^order x 2^order grid.
struct GridPoint {
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  unsigned order = 1;

  friend bool operator==(const GridPoint&, const GridPoint&) = default;
};

namespace detail {

inline void check_order(unsigned order) {
  if (order < 1 || order > 31) {
    throw std::invalid_argument("hilbert: order must lie in [1, 31]");
  }
}

// Rotates/flips a quadrant so the sub-curve has the canonical orientation.
inline void hilbert_rotate(std::uint64_t side, std::uint64_t& x, std::uint64_t& y, std::uint64_t rx, std::uint64_t ry) {
  if (ry == 0) {
    if (rx == 1) {
      x = side - 1 - x;
      y = side - 1 - y;
    }
    std::swap(x, y);
  }
}

}  // namespace detail

/// Position of `p` along the curve, in [0, 4^order).
inline std::uint64_t hilbert_index(const GridPoint& p) {
  detail::check_order(p.order);
  const std::uint64_t side = std::uint64_t{1} << p.order;
  if (p.x >= side || p.y >= side) {
    throw std::invalid_argument("hilbert: coordinate outside the grid");
  }
  std::uint64_t x = p.x;
  std::uint64_t y = p.y;
  std::uint64_t index = 0;
  for (std::uint64_t s = side / 2; s > 0; s /= 2) {
    const std::uint64_t rx = (x & s) > 0 ? 1 : 0;
    const std::uint64_t ry = (y & s) > 0 ? 1 : 0;
    index += s * s * ((3 * rx) ^ ry);
    detail::hilbert_rotate(side, x, y, rx, ry);
  }
  return index;
}

/// Inverse of `hilbert_index`.
inline GridPoint hilbert_point(std::uint64_t index, unsigned order) {
  detail::check_order(order);
  const std::uint64_t side = std::uint64_t{1} << order;
  if (index >= side * side) {
    throw std::invalid_argument("hilbert: index outside the curve");
  }
  std::uint64_t x = 0;
  std::uint64_t y = 0;
  std::uint64_t t = index;
  for (std::uint64_t s = 1; s < side; s *= 2) {
    const std::uint64_t rx = 1 & (t / 2);
    const std::uint64_t ry = 1 & (t ^ rx);
    detail::hilbert_rotate(s, x, y, rx, ry);
    x += s * rx;
    y += s * ry;
    t /= 4;
  }
  return {static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y), order};
}

}  // namespace abcloss

#endif
