// Copyright 2026 The xlvc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef XLVC_RNG_H_
#define XLVC_RNG_H_

#include <cstdint>
#include <random>
#include <string_view>

#include "xlvc/common.h"

namespace xlvc {

inline uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent generator from a root seed and a tuple of stream
// keys. Streams depend only on their keys, never on draw order elsewhere.
template <typename... Keys>
std::mt19937_64 MakeStream(uint64_t seed, Keys... keys) {
  uint64_t s = SplitMix64(seed);
  ((s = SplitMix64(s ^ static_cast<uint64_t>(keys))), ...);
  return std::mt19937_64(s);
}

inline uint64_t StringKey(std::string_view text) {
  return Fnv1a64(std::string(text));
}

inline Matrix RandomNormal(std::mt19937_64& rng, int rows, int cols, double sigma = 1.0) {
  std::normal_distribution<double> dist(0.0, sigma);
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = dist(rng);
  return m;
}

inline Matrix RandomUniform(std::mt19937_64& rng, int rows, int cols, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = dist(rng);
  return m;
}

}  // namespace xlvc

#endif  // XLVC_RNG_H_
