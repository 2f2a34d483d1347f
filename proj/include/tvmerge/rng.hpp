/* Copyright 2026 The tvmerge Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef TVMERGE_RNG_HPP_
#define TVMERGE_RNG_HPP_

#include <cstdint>
#include <span>
#include <utility>

namespace tvmerge {

__extension__ typedef unsigned __int128 UInt128;

inline constexpr std::uint64_t SplitMix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Counter-based stream: the i-th output is a pure function of (key, i), so
// any consumer holding the same key sees the same sequence regardless of
// thread placement. The key is derived from a seed and two stream labels.
class KeyedStream {
 public:
  KeyedStream(std::uint64_t seed, std::uint64_t label_a, std::uint64_t label_b)
      : key_(SplitMix64(SplitMix64(SplitMix64(seed) ^ label_a) ^
                        (label_b * 0xD1B54A32D192ED03ull))) {}

  std::uint64_t operator()() { return SplitMix64(key_ + counter_++ * 0x632BE59BD9B4E019ull); }

  // Uniform integer in [0, bound), Lemire's multiply-and-reject.
  std::uint64_t Uniform(std::uint64_t bound) {
    UInt128 m = static_cast<UInt128>((*this)()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = static_cast<UInt128>((*this)()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double UniformReal() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Forward Fisher-Yates over `items`, stopped after `count` positions. The
// first `count` entries equal those of a complete forward shuffle with the
// same stream; the tail is left in an unspecified order.
template <typename T>
void ShufflePrefix(std::span<T> items, std::size_t count, KeyedStream& stream) {
  const std::size_t n = items.size();
  if (count > n) count = n;
  for (std::size_t i = 0; i < count && i + 1 < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(stream.Uniform(n - i));
    using std::swap;
    swap(items[i], items[j]);
  }
}

template <typename T>
void Shuffle(std::span<T> items, KeyedStream& stream) {
  ShufflePrefix(items, items.size(), stream);
}

}  // namespace tvmerge

#endif  // TVMERGE_RNG_HPP_
