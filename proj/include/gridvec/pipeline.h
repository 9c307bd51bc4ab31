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

#include "gridvec/index_io.h"
#include "gridvec/schedule.h"
#include "gridvec/search.h"

namespace gridvec {

struct StreamBudget {
  size_t memory_cap = 64u << 20;  // bytes of one staged partial index
  // Transfer link in bytes/s. Simulated mode: load cost. Real mode: loads are
  // throttled to this rate when > 0.
  double bandwidth = 0.0;
  size_t stage_depth = 2;  // batches in flight; 1 disables overlap
};

// One batch of cells as shipped to the compute tier. Node ids inside the blob
// are local (position in `globals`).
struct PartialIndex {
  size_t batch = 0;
  size_t inter_degree = 0;
  std::vector<CellId> cells;
  std::vector<uint32_t> cell_offset;  // cells.size() + 1 prefix sums into globals
  std::vector<uint32_t> cell_degree;
  std::vector<uint64_t> adjacency_offset;  // per cell, start in `adjacency`
  std::vector<NodeId> globals;             // local -> global id
  std::vector<uint32_t> adjacency;         // local ids, row-major per cell
  std::vector<uint32_t> inter;  // globals.size() x cells.size() x inter_degree, local ids

  size_t byte_size() const;
  size_t intra_edge_count() const;
  size_t inter_edge_count() const;
  // Position of `cell` in `cells`, or cells.size().
  size_t position_of(CellId cell) const;
};

// Upper bound on the blob size of any batch of `batch_cells` cells.
size_t partial_index_bound(const IndexFile& file, const CellAssignment& assignment,
                           size_t batch_cells);

// Reads the batch's intra sections and inter slots lazily from `file`. Throws
// when the blob exceeds memory_cap.
PartialIndex assemble_partial_index(const IndexFile& file, const CellAssignment& assignment,
                                    std::span<const CellId> batch, size_t memory_cap,
                                    size_t batch_index = 0);

// GraphView over global ids backed by one partial index. Inter edges leaving
// nodes outside the batch (carried over from earlier batches) are read from
// the host-side index file.
class PartialGraphView final : public GraphView {
 public:
  PartialGraphView(const PartialIndex& blob, const CellAssignment& assignment,
                   const IndexFile& file);
  std::span<const NodeId> intra_neighbors(NodeId node) const override;
  std::span<const NodeId> inter_neighbors(NodeId node, CellId cell) const override;
  std::span<const NodeId> cell_members(CellId cell) const override;
  CellId cell_of(NodeId node) const override;
  size_t num_cells() const override;

 private:
  // Local id of `node`, or kInvalidNode when its cell is not in the batch.
  uint32_t local_of(NodeId node) const;

  const PartialIndex& blob_;
  const CellAssignment& assignment_;
  const IndexFile& file_;
  std::vector<uint32_t> slot_of_cell_;  // global cell -> position, or npos
};

// Deterministic costs for simulated-clock mode.
struct SimulatedClock {
  double ns_per_distance = 20.0;
  double ns_per_active_query = 2000.0;
  double ns_per_rerank = 200.0;
};

struct OutOfCoreParams {
  StreamBudget budget;
  size_t batch_cells = 0;    // b; 0: largest b whose blob bound fits memory_cap
  bool use_schedule = true;  // false: identity packing
  bool simulated = false;
  SimulatedClock clock;
};

struct TimelineSpan {
  std::string stage;  // "load", "compute", "rerank"
  size_t batch = 0;
  int64_t start_ns = 0;
  int64_t end_ns = 0;
};

struct OutOfCoreResult {
  std::vector<SearchResult> results;
  BatchPlan plan;
  std::vector<TimelineSpan> timeline;
  std::vector<int64_t> latency_ns;  // completion of each query's last batch
  std::vector<size_t> batch_bytes;
  size_t batch_cells = 0;
  size_t peak_resident_bytes = 0;
  int64_t total_ns = 0;
};

OutOfCoreResult run_out_of_core(const IndexFile& file, std::span<const RangeQuery> queries,
                                const SearchParams& params, const OutOfCoreParams& options);

// True when some span of stage `a` overlaps some span of stage `b` in time.
bool stages_overlap(std::span<const TimelineSpan> timeline, const std::string& a,
                    const std::string& b);

}  // namespace gridvec
