/* Copyright 2026 The loratwin Authors. All Rights Reserved.

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

#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace loratwin {

// Deterministic random substream keyed by (seed, stream ids).
//
// Every consumer of randomness owns its own stream, so adding one more
// adapter (or tree, or sweep point) never perturbs the draws of another.
// All transforms are built from raw mt19937_64 output instead of the
// std::*_distribution adaptors, whose algorithms are implementation
// defined; this keeps golden values stable across standard libraries.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::initializer_list<std::uint64_t> stream_ids) {
    std::vector<std::uint32_t> words;
    words.reserve(2 + 2 * stream_ids.size());
    words.push_back(static_cast<std::uint32_t>(seed));
    words.push_back(static_cast<std::uint32_t>(seed >> 32));
    for (std::uint64_t id : stream_ids) {
      words.push_back(static_cast<std::uint32_t>(id));
      words.push_back(static_cast<std::uint32_t>(id >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    engine_.seed(seq);
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Exponential with the given rate (mean 1/rate).
  double exponential(double rate) { return -std::log1p(-uniform01()) / rate; }

  // Standard normal via Box-Muller; one spare value cached per pair.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    double u2 = uniform01();
    // Guard log(0).
    while (u1 <= 0.0) u1 = uniform01();
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  double normal(double mean, double std) { return mean + std * normal(); }

  // Unbiased integer in [0, bound) via rejection sampling.
  std::uint64_t uniform_below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t draw = engine_();
    while (draw >= limit) draw = engine_();
    return draw % bound;
  }

  // Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Stream-id constants, so substream derivations are spelled once.
namespace stream_id {
inline constexpr std::uint64_t kArrivals = 1;
inline constexpr std::uint64_t kLengths = 2;
inline constexpr std::uint64_t kBootstrap = 3;
inline constexpr std::uint64_t kFeatureSubset = 4;
inline constexpr std::uint64_t kNoise = 5;
}  // namespace stream_id

}  // namespace loratwin
