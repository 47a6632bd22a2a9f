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

#ifndef ABCLOSS_RANDOM_HPP
#define ABCLOSS_RANDOM_HPP

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

/**
 * \file
 * \brief Keyed random streams.
 *
 * Every stream is a pure function of a master seed and a list of keys, so a
 * sampler that derives one stream per (generation, particle slot) produces the
 * same output no matter how the slots are scheduled across workers.
 */

namespace abcloss {

/// Random engine used throughout the library.
using RandomStream = std::mt19937_64;

/// Derives an independent stream from a master seed and a list of keys.
inline RandomStream make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys = {}) {
  std::vector<std::uint32_t> words;
  words.reserve(2 * (keys.size() + 1) + 1);
  const auto push = [&words](std::uint64_t value) {
    words.push_back(static_cast<std::uint32_t>(value & 0xffffffffULL));
    words.push_back(static_cast<std::uint32_t>(value >> 32U));
  };
  push(seed);
  for (const auto key : keys) {
    push(key);
  }
  // Length tag keeps (s) and (s, 0) apart.
  words.push_back(static_cast<std::uint32_t>(keys.size()));
  std::seed_seq sequence(words.begin(), words.end());
  return RandomStream{sequence};
}

/// Uniform draw on the open interval (0, 1).
inline double open_uniform(RandomStream& rng) {
  std::uniform_real_distribution<double> unit{0.0, 1.0};
  double u = unit(rng);
  while (u <= 0.0) {
    u = unit(rng);
  }
  return u;
}

}  // namespace abcloss

#endif
