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

#include <cstdint>
#include <span>
#include <vector>

#include "gridvec/core.h"

namespace gridvec {

// Per-dimension affine 8-bit scalar quantizer. Dimension j decodes as
// lo[j] + code * step[j]; a zero-range dimension has step 0 and code 0.
class ScalarQuantizer {
 public:
  ScalarQuantizer() = default;
  ScalarQuantizer(size_t dim, std::vector<float> lo, std::vector<float> step,
                  std::vector<uint8_t> codes);

  static ScalarQuantizer train_and_encode(const Dataset& dataset);

  size_t dim() const { return dim_; }
  size_t size() const { return dim_ == 0 ? 0 : codes_.size() / dim_; }

  std::span<const uint8_t> code(NodeId id) const {
    return {codes_.data() + static_cast<size_t>(id) * dim_, dim_};
  }
  void decode(NodeId id, std::span<float> out) const;

  // Asymmetric distance between a float query and a stored code.
  float distance(std::span<const float> query, NodeId id, Metric metric) const;
  // Distance between two stored codes.
  float code_distance(NodeId a, NodeId b, Metric metric) const;

  const std::vector<float>& lo() const { return lo_; }
  const std::vector<float>& step() const { return step_; }
  const std::vector<uint8_t>& codes() const { return codes_; }

 private:
  size_t dim_ = 0;
  std::vector<float> lo_;
  std::vector<float> step_;
  std::vector<uint8_t> codes_;
};

}  // namespace gridvec
