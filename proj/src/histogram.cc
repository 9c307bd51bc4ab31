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

#include "gridvec/histogram.h"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

namespace gridvec {

namespace {

size_t nearest_centroid(std::span<const float> v, const std::vector<float>& centroids,
                        size_t k, size_t dim) {
  size_t best = 0;
  float best_d = std::numeric_limits<float>::infinity();
  for (size_t c = 0; c < k; ++c) {
    const float d = distance_raw(v.data(), centroids.data() + c * dim, dim,
                                 Metric::kSquaredEuclidean);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

}  // namespace

KMeansResult kmeans(const Dataset& dataset, size_t num_clusters, size_t max_iterations,
                    size_t sample_cap, uint64_t seed) {
  const size_t n = dataset.size();
  const size_t dim = dataset.dim();
  if (n == 0) throw Error("kmeans: empty dataset");
  const size_t k = std::clamp<size_t>(num_clusters, 1, n);
  std::mt19937_64 rng(seed);

  // Training sample (sorted ids for a stable iteration order).
  std::vector<NodeId> sample(n);
  std::iota(sample.begin(), sample.end(), NodeId{0});
  const size_t sample_size = std::max(k, std::min(n, sample_cap));
  if (sample_size < n) {
    std::shuffle(sample.begin(), sample.end(), rng);
    sample.resize(sample_size);
    std::sort(sample.begin(), sample.end());
  }

  // k-means++ seeding.
  std::vector<float> centroids(k * dim);
  std::vector<double> min_d(sample.size(), std::numeric_limits<double>::infinity());
  std::uniform_int_distribution<size_t> pick(0, sample.size() - 1);
  size_t chosen = pick(rng);
  for (size_t c = 0; c < k; ++c) {
    auto src = dataset.vector(sample[chosen]);
    std::copy(src.begin(), src.end(), centroids.begin() + c * dim);
    double total = 0.0;
    for (size_t s = 0; s < sample.size(); ++s) {
      const double d = distance_raw(dataset.vector(sample[s]).data(), centroids.data() + c * dim,
                                    dim, Metric::kSquaredEuclidean);
      min_d[s] = std::min(min_d[s], d);
      total += min_d[s];
    }
    if (c + 1 == k) break;
    if (total <= 0.0) {
      chosen = pick(rng);
      continue;
    }
    std::uniform_real_distribution<double> u(0.0, total);
    double target = u(rng);
    chosen = sample.size() - 1;
    for (size_t s = 0; s < sample.size(); ++s) {
      target -= min_d[s];
      if (target < 0.0) {
        chosen = s;
        break;
      }
    }
  }

  // Lloyd iterations over the sample.
  std::vector<uint32_t> sample_labels(sample.size(), 0);
  std::vector<double> sums(k * dim);
  std::vector<size_t> sizes(k);
  for (size_t iter = 0; iter < max_iterations; ++iter) {
    bool changed = iter == 0;
    for (size_t s = 0; s < sample.size(); ++s) {
      const auto label =
          static_cast<uint32_t>(nearest_centroid(dataset.vector(sample[s]), centroids, k, dim));
      changed = changed || label != sample_labels[s];
      sample_labels[s] = label;
    }
    if (!changed) break;
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(sizes.begin(), sizes.end(), 0);
    for (size_t s = 0; s < sample.size(); ++s) {
      auto v = dataset.vector(sample[s]);
      const size_t c = sample_labels[s];
      ++sizes[c];
      for (size_t j = 0; j < dim; ++j) sums[c * dim + j] += v[j];
    }
    for (size_t c = 0; c < k; ++c) {
      if (sizes[c] == 0) continue;  // empty cluster keeps its previous centroid
      for (size_t j = 0; j < dim; ++j) {
        centroids[c * dim + j] = static_cast<float>(sums[c * dim + j] / sizes[c]);
      }
    }
  }

  KMeansResult result;
  result.labels.resize(n);
  for (NodeId i = 0; i < n; ++i) {
    result.labels[i] = static_cast<uint32_t>(nearest_centroid(dataset.vector(i), centroids, k, dim));
  }
  result.centroids = std::move(centroids);
  return result;
}

ClusterHistogram build_histogram(const Dataset& dataset, const CellAssignment& assignment,
                                 const HistogramParams& params) {
  if (params.num_clusters == 0) throw Error("histogram: K_c must be >= 1");
  auto km = kmeans(dataset, params.num_clusters, params.max_iterations,
                   params.sample_per_cluster * params.num_clusters, params.seed);
  ClusterHistogram h;
  h.dim = dataset.dim();
  h.num_clusters = km.centroids.size() / dataset.dim();
  h.num_cells = assignment.num_cells();
  h.top_m = params.top_m;
  h.centroids = std::move(km.centroids);
  h.counts.assign(h.num_cells * h.num_clusters, 0);
  for (NodeId i = 0; i < dataset.size(); ++i) {
    ++h.counts[static_cast<size_t>(assignment.cell_of[i]) * h.num_clusters + km.labels[i]];
  }
  return h;
}

std::vector<uint64_t> estimate_cardinalities(const ClusterHistogram& histogram,
                                             std::span<const float> q,
                                             std::span<const CellId> cells, Metric metric) {
  std::vector<std::pair<float, size_t>> dists(histogram.num_clusters);
  for (size_t c = 0; c < histogram.num_clusters; ++c) {
    dists[c] = {distance(q, histogram.centroid(c), metric), c};
  }
  const size_t top = std::min(histogram.top_m, histogram.num_clusters);
  std::partial_sort(dists.begin(), dists.begin() + static_cast<ptrdiff_t>(top), dists.end());
  std::vector<uint64_t> estimates(cells.size(), 0);
  for (size_t i = 0; i < cells.size(); ++i) {
    for (size_t t = 0; t < top; ++t) estimates[i] += histogram.count(cells[i], dists[t].second);
  }
  return estimates;
}

std::vector<CellId> order_by_estimates(std::span<const CellId> cells,
                                       std::span<const uint64_t> estimates) {
  std::vector<size_t> idx(cells.size());
  std::iota(idx.begin(), idx.end(), size_t{0});
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
    return estimates[a] > estimates[b] || (estimates[a] == estimates[b] && cells[a] < cells[b]);
  });
  std::vector<CellId> out(cells.size());
  for (size_t i = 0; i < idx.size(); ++i) out[i] = cells[idx[i]];
  return out;
}

std::vector<CellId> order_cells(std::span<const CellId> cells, std::span<const float> q,
                                const ClusterHistogram& histogram, Metric metric) {
  const auto estimates = estimate_cardinalities(histogram, q, cells, metric);
  return order_by_estimates(cells, estimates);
}

}  // namespace gridvec
