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

#include "gridvec/core.h"

#include <algorithm>
#include <cmath>
#include <set>

namespace gridvec {

namespace {

constexpr size_t kLanes = 8;

inline float combine_lanes(const float* acc) {
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) +
         ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

float squared_l2(const float* x, const float* y, size_t dim) {
  float acc[kLanes] = {};
  size_t j = 0;
  for (; j + kLanes <= dim; j += kLanes) {
    for (size_t lane = 0; lane < kLanes; ++lane) {
      const float diff = x[j + lane] - y[j + lane];
      acc[lane] += diff * diff;
    }
  }
  float sum = combine_lanes(acc);
  for (; j < dim; ++j) {
    const float diff = x[j] - y[j];
    sum += diff * diff;
  }
  return sum;
}

float dot(const float* x, const float* y, size_t dim) {
  float acc[kLanes] = {};
  size_t j = 0;
  for (; j + kLanes <= dim; j += kLanes) {
    for (size_t lane = 0; lane < kLanes; ++lane) {
      acc[lane] += x[j + lane] * y[j + lane];
    }
  }
  float sum = combine_lanes(acc);
  for (; j < dim; ++j) sum += x[j] * y[j];
  return sum;
}

}  // namespace

Metric parse_metric(const std::string& name) {
  if (name == "l2" || name == "squared-euclidean") return Metric::kSquaredEuclidean;
  if (name == "ip" || name == "inner-product-negated") return Metric::kInnerProductNegated;
  throw Error("unknown metric '" + name + "'");
}

std::string metric_name(Metric metric) {
  return metric == Metric::kSquaredEuclidean ? "l2" : "ip";
}

float distance_raw(const float* x, const float* y, size_t dim, Metric metric) {
  if (metric == Metric::kSquaredEuclidean) return squared_l2(x, y, dim);
  return -dot(x, y, dim);
}

float distance(std::span<const float> x, std::span<const float> y, Metric metric) {
  if (x.size() != y.size()) {
    throw Error("distance: dimension mismatch (" + std::to_string(x.size()) + " vs " +
                std::to_string(y.size()) + ")");
  }
  return distance_raw(x.data(), y.data(), x.size(), metric);
}

Dataset::Dataset(size_t dim, size_t num_attributes)
    : dim_(dim), num_attributes_(num_attributes) {
  if (dim == 0) throw Error("dataset dimension must be positive");
}

Dataset::Dataset(size_t dim, size_t num_attributes, std::vector<float> vectors,
                 std::vector<double> attributes)
    : dim_(dim),
      num_attributes_(num_attributes),
      vectors_(std::move(vectors)),
      attributes_(std::move(attributes)) {
  if (dim == 0) throw Error("dataset dimension must be positive");
  if (vectors_.size() % dim != 0) throw Error("vector buffer is not a multiple of dim");
  size_ = vectors_.size() / dim;
  if (attributes_.size() != size_ * num_attributes_) {
    throw Error("attribute table has " + std::to_string(attributes_.size()) +
                " values, expected " + std::to_string(size_ * num_attributes_));
  }
  for (float v : vectors_) {
    if (!std::isfinite(v)) throw Error("dataset contains a non-finite vector entry");
  }
  for (double a : attributes_) {
    if (!std::isfinite(a)) throw Error("dataset contains a non-finite attribute");
  }
}

void Dataset::reserve(size_t n) {
  vectors_.reserve(n * dim_);
  attributes_.reserve(n * num_attributes_);
}

NodeId Dataset::add(std::span<const float> vector, std::span<const double> attributes) {
  if (vector.size() != dim_) throw Error("record vector has wrong dimension");
  if (attributes.size() != num_attributes_) throw Error("record has wrong attribute count");
  for (float v : vector) {
    if (!std::isfinite(v)) throw Error("record vector has a non-finite entry");
  }
  for (double a : attributes) {
    if (!std::isfinite(a)) throw Error("record has a non-finite attribute");
  }
  vectors_.insert(vectors_.end(), vector.begin(), vector.end());
  attributes_.insert(attributes_.end(), attributes.begin(), attributes.end());
  return static_cast<NodeId>(size_++);
}

void RangeQuery::validate(size_t dim, size_t num_attributes) const {
  if (q.size() != dim) {
    throw Error("query vector has dimension " + std::to_string(q.size()) + ", index has " +
                std::to_string(dim));
  }
  if (k == 0) throw Error("query k must be positive");
  std::set<size_t> seen;
  for (const auto& p : predicates) {
    if (p.attribute >= num_attributes) {
      throw Error("predicate references attribute " + std::to_string(p.attribute) +
                  " but dataset has " + std::to_string(num_attributes));
    }
    if (!(p.low <= p.high)) throw Error("predicate has low > high");
    if (!seen.insert(p.attribute).second) {
      throw Error("attribute " + std::to_string(p.attribute) + " appears in two predicates");
    }
  }
}

bool satisfies(std::span<const double> attributes, std::span<const Predicate> predicates) {
  return std::all_of(predicates.begin(), predicates.end(), [&](const Predicate& p) {
    return p.contains(attributes[p.attribute]);
  });
}

bool satisfies(const VectorRecord& record, const RangeQuery& query) {
  return satisfies(record.attributes, query.predicates);
}

}  // namespace gridvec
