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
#include "gridvec/grid.h"

namespace gridvec {

// k-means centroids plus an S x K_c table of per-cell cluster counts.
struct ClusterHistogram {
  size_t dim = 0;
  size_t num_clusters = 0;
  size_t num_cells = 0;
  size_t top_m = 8;
  std::vector<float> centroids;     // num_clusters x dim
  std::vector<uint32_t> counts;     // num_cells x num_clusters

  std::span<const float> centroid(size_t c) const { return {centroids.data() + c * dim, dim}; }
  uint32_t count(CellId cell, size_t cluster) const {
    return counts[static_cast<size_t>(cell) * num_clusters + cluster];
  }
};

struct HistogramParams {
  size_t num_clusters = 256;
  size_t top_m = 8;
  size_t max_iterations = 25;
  // Lloyd iterations run on at most this many points per cluster.
  size_t sample_per_cluster = 64;
  uint64_t seed = 7;
};

struct KMeansResult {
  std::vector<float> centroids;
  std::vector<uint32_t> labels;  // one per dataset record
};

// k-means++ seeding followed by Lloyd iterations; labels cover every record.
KMeansResult kmeans(const Dataset& dataset, size_t num_clusters, size_t max_iterations,
                    size_t sample_cap, uint64_t seed);

ClusterHistogram build_histogram(const Dataset& dataset, const CellAssignment& assignment,
                                 const HistogramParams& params);

// Card(C_i) = sum of H[C_i, cs] over the top_m clusters nearest to q.
std::vector<uint64_t> estimate_cardinalities(const ClusterHistogram& histogram,
                                             std::span<const float> q,
                                             std::span<const CellId> cells,
                                             Metric metric = Metric::kSquaredEuclidean);

// Sorts cells by estimated cardinality descending, ties by ascending id.
std::vector<CellId> order_cells(std::span<const CellId> cells, std::span<const float> q,
                                const ClusterHistogram& histogram,
                                Metric metric = Metric::kSquaredEuclidean);

std::vector<CellId> order_by_estimates(std::span<const CellId> cells,
                                       std::span<const uint64_t> estimates);

}  // namespace gridvec
