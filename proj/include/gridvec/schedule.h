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

// Query-cell incidence: A(i, j) = 1 when query i needs cell j.
class IncidenceMatrix {
 public:
  IncidenceMatrix() = default;
  IncidenceMatrix(size_t num_queries, size_t num_cells);
  static IncidenceMatrix from_rows(const std::vector<std::vector<uint8_t>>& rows);

  size_t num_queries() const { return num_queries_; }
  size_t num_cells() const { return num_cells_; }
  bool at(size_t query, CellId cell) const { return bits_[query * num_cells_ + cell] != 0; }
  void set(size_t query, CellId cell, bool value = true);
  std::vector<CellId> cells_of(size_t query) const;
  // Cells needed by at least one query, ascending.
  std::vector<CellId> referenced_cells() const;

 private:
  size_t num_queries_ = 0;
  size_t num_cells_ = 0;
  std::vector<uint8_t> bits_;
};

// Row i is cells_intersecting(query i); queries with more than s_thre cells
// take the whole-graph path and get an all-ones row.
IncidenceMatrix build_incidence(std::span<const RangeQuery> queries, const GridSpec& grid,
                                size_t s_thre);

size_t active_count(const IncidenceMatrix& a, std::span<const CellId> batch);
std::vector<uint32_t> active_queries(const IncidenceMatrix& a, std::span<const CellId> batch);

struct BatchPlan {
  std::vector<std::vector<CellId>> batches;
  std::vector<std::vector<uint32_t>> active;  // per batch, ascending query ids
  size_t total_cost = 0;
};

// Fills active sets and total cost for a given partition.
BatchPlan make_plan(const IncidenceMatrix& a, std::vector<std::vector<CellId>> batches);

// ceil(|cells| / b) batches; each cell, in the given order, goes to the
// non-full batch with the smallest increase in active queries, ties toward the
// batch with fewer active queries, then the lower index.
BatchPlan schedule_greedy(const IncidenceMatrix& a, std::span<const CellId> cells, size_t b);

// Consecutive chunks of b cells in the given order.
BatchPlan schedule_identity(const IncidenceMatrix& a, std::span<const CellId> cells, size_t b);

inline constexpr size_t kExactScheduleLimit = 10;

// Exhaustive minimum over all assignments into ceil(|cells| / b) batches of
// capacity b. Throws for more than kExactScheduleLimit cells.
BatchPlan schedule_exact(const IncidenceMatrix& a, std::span<const CellId> cells, size_t b);

}  // namespace gridvec
