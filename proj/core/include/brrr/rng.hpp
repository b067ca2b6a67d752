// Copyright 2026 The brrr Authors
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

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace brrr {

using Engine = std::mt19937_64;

// SplitMix64 finalizer. Used as a stateless counter-based generator:
// mix(counter) is a well-distributed 64-bit value for any counter.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Derive the seed of an independent stream from a master seed and a path
// of stream keys (e.g. {replication, purpose}). The result depends only on
// the key values, never on the order in which streams are requested, so
// parallel schedules reproduce serial ones.
constexpr std::uint64_t stream_seed(
    std::uint64_t master, std::initializer_list<std::uint64_t> keys) noexcept {
  std::uint64_t s = splitmix64(master);
  for (std::uint64_t k : keys) s = splitmix64(s ^ splitmix64(k + 0x632BE59BD9B4E019ULL));
  return s;
}

inline Engine make_engine(std::uint64_t master,
                          std::initializer_list<std::uint64_t> keys = {}) {
  return Engine(stream_seed(master, keys));
}

// Stream purposes. Values are part of the reproducibility contract.
namespace stream {
inline constexpr std::uint64_t kDesign = 1;
inline constexpr std::uint64_t kCoef = 2;
inline constexpr std::uint64_t kNoise = 3;
inline constexpr std::uint64_t kMask = 4;
inline constexpr std::uint64_t kChain = 5;
inline constexpr std::uint64_t kTuning = 6;
inline constexpr std::uint64_t kDataset = 7;
}  // namespace stream

}  // namespace brrr
