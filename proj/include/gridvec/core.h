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

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridvec {

using NodeId = uint32_t;
using CellId = uint32_t;

inline constexpr NodeId kInvalidNode = std::numeric_limits<NodeId>::max();

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Metric : uint32_t {
  kSquaredEuclidean = 0,
  kInnerProductNegated = 1,
};

Metric parse_metric(const std::string& name);
std::string metric_name(Metric metric);

// Lane-blocked distance kernel. The summation order is fixed (8 partial sums
// combined pairwise) so repeated calls on one machine are bit-identical.
float distance(std::span<const float> x, std::span<const float> y,
               Metric metric = Metric::kSquaredEuclidean);

// Unchecked variant used on hot paths; both pointers must hold `dim` floats.
float distance_raw(const float* x, const float* y, size_t dim, Metric metric);

struct VectorRecord {
  NodeId id = 0;
  std::span<const float> vector;
  std::span<const double> attributes;
};

// Row-major storage of n vectors (dim floats each) and n attribute tuples
// (m doubles each). Ids are dense in [0, n).
class Dataset {
 public:
  Dataset() = default;
  Dataset(size_t dim, size_t num_attributes);
  Dataset(size_t dim, size_t num_attributes, std::vector<float> vectors,
          std::vector<double> attributes);

  NodeId add(std::span<const float> vector, std::span<const double> attributes);
  void reserve(size_t n);

  size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  size_t dim() const { return dim_; }
  size_t num_attributes() const { return num_attributes_; }

  std::span<const float> vector(NodeId id) const {
    return {vectors_.data() + static_cast<size_t>(id) * dim_, dim_};
  }
  std::span<const double> attributes(NodeId id) const {
    return {attributes_.data() + static_cast<size_t>(id) * num_attributes_,
            num_attributes_};
  }
  double attribute(NodeId id, size_t attr) const {
    return attributes_[static_cast<size_t>(id) * num_attributes_ + attr];
  }
  VectorRecord record(NodeId id) const { return {id, vector(id), attributes(id)}; }

  const std::vector<float>& vectors() const { return vectors_; }
  const std::vector<double>& attribute_table() const { return attributes_; }

 private:
  size_t dim_ = 0;
  size_t num_attributes_ = 0;
  size_t size_ = 0;
  std::vector<float> vectors_;
  std::vector<double> attributes_;
};

// Closed interval [low, high] over one attribute.
struct Predicate {
  size_t attribute = 0;
  double low = 0.0;
  double high = 0.0;

  bool contains(double value) const { return low <= value && value <= high; }
};

struct RangeQuery {
  std::vector<float> q;
  std::vector<Predicate> predicates;
  size_t k = 10;

  // Throws Error when the query is malformed for a dataset of the given shape.
  void validate(size_t dim, size_t num_attributes) const;
};

bool satisfies(std::span<const double> attributes, std::span<const Predicate> predicates);
bool satisfies(const VectorRecord& record, const RangeQuery& query);

struct Neighbor {
  NodeId id = kInvalidNode;
  float distance = 0.0f;

  friend bool operator<(const Neighbor& a, const Neighbor& b) {
    return a.distance < b.distance || (a.distance == b.distance && a.id < b.id);
  }
  friend bool operator==(const Neighbor& a, const Neighbor& b) = default;
};

}  // namespace gridvec
