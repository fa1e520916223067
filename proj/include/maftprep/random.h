// Copyright 2026 The maftprep Authors.
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

#ifndef MAFTPREP_RANDOM_H_
#define MAFTPREP_RANDOM_H_

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace maftprep::random {

// SplitMix64 finalizer; a bijective 64-bit mix.
constexpr std::uint64_t Mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based draw: a pure function of (seed, a, b, stream), so the value
// at any coordinate does not depend on evaluation order.
constexpr std::uint64_t CounterDraw(std::uint64_t seed, std::uint64_t a,
                                    std::uint64_t b, std::uint64_t stream) {
  return Mix64(Mix64(Mix64(seed ^ Mix64(stream)) ^ a) ^ b);
}

// [0, 1) with 53 random bits.
constexpr double ToUnit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, bound) from 64 random bits, Lemire's
// multiply-shift. The bias is at most bound / 2^64.
constexpr std::uint64_t ToBounded(std::uint64_t bits, std::uint64_t bound) {
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(bits) * bound) >> 64);
}

// Fisher-Yates driven by mt19937_64, whose output sequence is fixed by the
// standard (std::shuffle's is not).
template <typename T>
void Shuffle(std::span<T> items, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(ToBounded(gen(), i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace maftprep::random

#endif  // MAFTPREP_RANDOM_H_
