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
#include "gridvec/histogram.h"
#include "gridvec/quantizer.h"

namespace gridvec {

inline constexpr uint32_t kFormatVersion = 1;

struct BuildParams {
  size_t intra_degree = 16;     // d
  size_t inter_degree = 2;      // l
  size_t knn_iterations = 10;   // NN-descent rounds
  size_t ef_construction = 100;
  uint64_t rng_seed = 42;
  Metric metric = Metric::kSquaredEuclidean;
};

struct GridParams {
  // Explicit attribute list; empty means select the p most selective.
  std::vector<size_t> attributes;
  size_t p = 0;  // 0 means min(m, 4)
  size_t num_cells = 16;
  // Explicit per-attribute segment counts; empty means factor num_cells.
  std::vector<size_t> segments;
};

// Fixed out-degree adjacency of one cell. Neighbor ids are global node ids.
struct IntraCellGraph {
  CellId cell = 0;
  size_t degree = 0;
  std::vector<NodeId> adjacency;  // members.size() x degree, row i = member i

  std::span<const NodeId> row(size_t rank) const {
    return {adjacency.data() + rank * degree, degree};
  }
};

// For every node and every cell, `inter_degree` slots of neighbor ids inside
// that cell. Unused slots (own cell, empty or small cells) hold kInvalidNode
// and always trail the valid ones.
struct InterCellEdges {
  size_t num_cells = 0;
  size_t inter_degree = 0;
  std::vector<NodeId> slots;

  std::span<const NodeId> raw(NodeId node, CellId cell) const {
    return {slots.data() + (static_cast<size_t>(node) * num_cells + cell) * inter_degree,
            inter_degree};
  }
  std::span<const NodeId> edges(NodeId node, CellId cell) const {
    auto r = raw(node, cell);
    size_t n = 0;
    while (n < r.size() && r[n] != kInvalidNode) ++n;
    return r.first(n);
  }
  size_t total_edges() const;
};

// Neighborhood access shared by the full in-memory index and the partial
// per-batch blobs streamed by the out-of-core executor.
class GraphView {
 public:
  virtual ~GraphView() = default;
  virtual std::span<const NodeId> intra_neighbors(NodeId node) const = 0;
  virtual std::span<const NodeId> inter_neighbors(NodeId node, CellId cell) const = 0;
  virtual std::span<const NodeId> cell_members(CellId cell) const = 0;
  virtual CellId cell_of(NodeId node) const = 0;
  virtual size_t num_cells() const = 0;
};

struct GmgIndex {
  uint32_t format_version = kFormatVersion;
  BuildParams params;
  GridSpec grid;
  CellAssignment assignment;
  std::vector<IntraCellGraph> intra;
  InterCellEdges inter;
  ClusterHistogram histogram;
  ScalarQuantizer quantizer;
  Dataset data;

  size_t size() const { return data.size(); }
  size_t num_cells() const { return intra.size(); }
  size_t total_intra_edges() const;
};

class IndexGraphView final : public GraphView {
 public:
  explicit IndexGraphView(const GmgIndex& index) : index_(index) {}
  std::span<const NodeId> intra_neighbors(NodeId node) const override;
  std::span<const NodeId> inter_neighbors(NodeId node, CellId cell) const override;
  std::span<const NodeId> cell_members(CellId cell) const override;
  CellId cell_of(NodeId node) const override;
  size_t num_cells() const override;

 private:
  const GmgIndex& index_;
};

// NN-descent to an approximate 2d-NN graph, then rank-based diversification
// truncated (and refilled) to min(d, |cell|-1) neighbors per node.
IntraCellGraph build_intra_graph(CellId cell, std::span<const NodeId> members,
                                 const Dataset& data, const BuildParams& params);

// Approximate top-(2d) neighbor lists of `members` (rows sorted by distance).
std::vector<std::vector<Neighbor>> nn_descent(std::span<const NodeId> members,
                                              const Dataset& data, size_t k,
                                              size_t iterations, uint64_t seed, Metric metric);

// Unfiltered greedy search of `cell` for `query` using only intra edges.
std::vector<Neighbor> search_cell_unfiltered(const GraphView& graph, CellId cell,
                                             std::span<const float> query, const Dataset& data,
                                             size_t num_results, size_t beam,
                                             size_t num_entries, uint64_t seed, Metric metric);

InterCellEdges build_inter_edges(const GraphView& graph, const Dataset& data,
                                 const CellAssignment& assignment, const BuildParams& params);

GmgIndex build_index(Dataset data, const GridParams& grid_params, const BuildParams& params,
                     const HistogramParams& histogram_params);

}  // namespace gridvec
