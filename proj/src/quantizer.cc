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

#include "gridvec/quantizer.h"

#include <algorithm>
#include <cmath>

namespace gridvec {

namespace {

constexpr float kLevels = 255.0f;

}  // namespace

ScalarQuantizer::ScalarQuantizer(size_t dim, std::vector<float> lo, std::vector<float> step,
                                 std::vector<uint8_t> codes)
    : dim_(dim), lo_(std::move(lo)), step_(std::move(step)), codes_(std::move(codes)) {
  if (lo_.size() != dim_ || step_.size() != dim_ || (dim_ > 0 && codes_.size() % dim_ != 0)) {
    throw Error("scalar quantizer: inconsistent codebook sizes");
  }
}

ScalarQuantizer ScalarQuantizer::train_and_encode(const Dataset& dataset) {
  const size_t dim = dataset.dim();
  const size_t n = dataset.size();
  std::vector<float> lo(dim, 0.0f);
  std::vector<float> hi(dim, 0.0f);
  if (n > 0) {
    auto first = dataset.vector(0);
    std::copy(first.begin(), first.end(), lo.begin());
    std::copy(first.begin(), first.end(), hi.begin());
  }
  for (NodeId i = 1; i < n; ++i) {
    auto v = dataset.vector(i);
    for (size_t j = 0; j < dim; ++j) {
      lo[j] = std::min(lo[j], v[j]);
      hi[j] = std::max(hi[j], v[j]);
    }
  }
  std::vector<float> step(dim);
  for (size_t j = 0; j < dim; ++j) {
    step[j] = hi[j] > lo[j] ? (hi[j] - lo[j]) / kLevels : 0.0f;
  }
  std::vector<uint8_t> codes(n * dim);
  for (NodeId i = 0; i < n; ++i) {
    auto v = dataset.vector(i);
    for (size_t j = 0; j < dim; ++j) {
      if (step[j] == 0.0f) continue;
      const float level = std::nearbyint((v[j] - lo[j]) / step[j]);
      codes[static_cast<size_t>(i) * dim + j] =
          static_cast<uint8_t>(std::clamp(level, 0.0f, kLevels));
    }
  }
  return ScalarQuantizer(dim, std::move(lo), std::move(step), std::move(codes));
}

void ScalarQuantizer::decode(NodeId id, std::span<float> out) const {
  auto c = code(id);
  for (size_t j = 0; j < dim_; ++j) out[j] = lo_[j] + static_cast<float>(c[j]) * step_[j];
}

float ScalarQuantizer::distance(std::span<const float> query, NodeId id, Metric metric) const {
  const uint8_t* c = codes_.data() + static_cast<size_t>(id) * dim_;
  // Same 8-lane blocking as the float kernel.
  float acc[8] = {};
  size_t j = 0;
  if (metric == Metric::kSquaredEuclidean) {
    for (; j + 8 <= dim_; j += 8) {
      for (size_t lane = 0; lane < 8; ++lane) {
        const size_t t = j + lane;
        const float diff = query[t] - (lo_[t] + static_cast<float>(c[t]) * step_[t]);
        acc[lane] += diff * diff;
      }
    }
  } else {
    for (; j + 8 <= dim_; j += 8) {
      for (size_t lane = 0; lane < 8; ++lane) {
        const size_t t = j + lane;
        acc[lane] += query[t] * (lo_[t] + static_cast<float>(c[t]) * step_[t]);
      }
    }
  }
  float sum = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
  for (; j < dim_; ++j) {
    const float value = lo_[j] + static_cast<float>(c[j]) * step_[j];
    if (metric == Metric::kSquaredEuclidean) {
      const float diff = query[j] - value;
      sum += diff * diff;
    } else {
      sum += query[j] * value;
    }
  }
  return metric == Metric::kSquaredEuclidean ? sum : -sum;
}

float ScalarQuantizer::code_distance(NodeId a, NodeId b, Metric metric) const {
  std::vector<float> decoded(dim_);
  decode(a, decoded);
  return distance(decoded, b, metric);
}

}  // namespace gridvec
