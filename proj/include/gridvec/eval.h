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
#include <string>
#include <vector>

#include "gridvec/core.h"

namespace gridvec::eval {

// ---- ground truth -------------------------------------------------------

// Exact filtered top-k: filter, exact distance, full sort, ties by id.
std::vector<Neighbor> brute_force_rfnns(const Dataset& dataset, const RangeQuery& query,
                                        Metric metric = Metric::kSquaredEuclidean);

// |result ∩ oracle| / min(k, |oracle|); 1.0 when the oracle is empty.
double recall_at_k(std::span<const NodeId> result, std::span<const NodeId> oracle, size_t k);

std::vector<NodeId> ids_of(std::span<const Neighbor> neighbors);

// ---- synthetic workloads ------------------------------------------------

enum class AttributeLaw { kUniform, kSkewed };

struct DataSpec {
  size_t n = 10000;
  size_t dim = 16;
  size_t num_attributes = 2;
  size_t num_clusters = 32;   // Gaussian mixture components (0 = uniform cube)
  float cluster_std = 0.05f;
  double attribute_range = 10000.0;  // integer attribute values in [0, range)
  AttributeLaw attribute_law = AttributeLaw::kUniform;
  uint64_t seed = 1;
};

Dataset generate_dataset(const DataSpec& spec);

// Query vectors drawn from the same mixture as generate_dataset(spec).
std::vector<std::vector<float>> generate_query_vectors(const DataSpec& spec, size_t count,
                                                       uint64_t seed);

enum class SelectivityLaw { kUniform, kFixed };

struct QuerySpec {
  size_t count = 200;
  size_t k = 10;
  SelectivityLaw law = SelectivityLaw::kUniform;
  double min_width = 0.01;  // uniform law bounds (fraction of value range)
  double max_width = 1.0;
  double fixed_width = 0.25;
  size_t filtered_attributes = 0;  // 0: all attributes
  uint64_t seed = 2;
};

struct GeneratedQuery {
  RangeQuery query;
  std::vector<double> widths;  // per filtered attribute
  double measured_selectivity = 0.0;
};

// One interval per filtered attribute: width = target fraction of the
// attribute's empirical [min, max], position uniform at random.
std::vector<GeneratedQuery> generate_queries(const QuerySpec& spec, const Dataset& dataset,
                                             std::span<const std::vector<float>> vectors);

double measure_selectivity(const Dataset& dataset, const RangeQuery& query);

// ---- cell-count advisor -------------------------------------------------

struct CostModel {
  double alpha = 0.5;   // entry-quality speedup factor, (0, 1)
  double sigma = 1.0 / 16;  // query selectivity, [0, 1]
  uint64_t n = 1000000;
};

// T(S) = (1 + sigma * S * alpha) * ln(n / S)
double cost_of_cells(const CostModel& model, double cells);
// dT/dS = sigma * alpha * (ln(n / S) - 1) - 1 / S
double cost_derivative(const CostModel& model, double cells);

struct CellAdvice {
  uint64_t argmin = 1;           // integer minimiser of T over [1, n/4]
  double theta = 0.0;            // 1 / (alpha (ln(n / argmin) - 1))
  double closed_form = 0.0;      // theta / sigma
  std::vector<double> curve;     // T(S) for S = 1 .. curve.size()
};

// Locates the minimiser by bisection on dT/dS and compares the neighbouring
// integers plus the interval ends. `curve_points` caps the emitted curve.
CellAdvice advise_cell_count(const CostModel& model, size_t curve_points = 0);

}  // namespace gridvec::eval
