// Copyright 2026 The gridvec Authors.
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

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "gridvec/core.h"

namespace gridvec {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

template <typename... Rest>
uint64_t mix_seed(uint64_t seed, Rest... rest) {
  uint64_t h = splitmix64(seed);
  ((h = splitmix64(h ^ static_cast<uint64_t>(rest))), ...);
  return h;
}

// Up to `count` distinct members drawn uniformly; all members (in order) when
// the cell is not larger than `count`.
template <typename Rng>
std::vector<NodeId> sample_members(std::span<const NodeId> members, size_t count, Rng& rng) {
  if (members.size() <= count) return {members.begin(), members.end()};
  std::vector<NodeId> out;
  out.reserve(count);
  std::vector<size_t> picked;
  std::uniform_int_distribution<size_t> pick(0, members.size() - 1);
  while (out.size() < count) {
    const size_t i = pick(rng);
    if (std::find(picked.begin(), picked.end(), i) != picked.end()) continue;
    picked.push_back(i);
    out.push_back(members[i]);
  }
  return out;
}

inline int64_t now_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace gridvec
