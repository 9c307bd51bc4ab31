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
#include <vector>

#include "gridvec/core.h"

namespace gridvec {

// Grid over p partitioned attributes. Attribute i is cut into segments[i]
// quantile segments; the cell id of coordinate (s_1..s_p) is its row-major
// linearization (last attribute varies fastest).
struct GridSpec {
  std::vector<size_t> attributes;
  std::vector<size_t> segments;
  // Per attribute: segments[i]-1 split values. Split j is the largest value
  // that sorted into segment j.
  std::vector<std::vector<double>> boundaries;
  // Per attribute, per segment: [min, max] of the values actually placed there.
  // An empty segment (only possible when n < segments[i]) has lo > hi.
  std::vector<std::vector<double>> segment_lo;
  std::vector<std::vector<double>> segment_hi;

  size_t num_cells() const;
  size_t num_partitioned() const { return attributes.size(); }
  CellId cell_id(std::span<const size_t> coordinate) const;
  std::vector<size_t> coordinate(CellId cell) const;
};

struct CellAssignment {
  std::vector<CellId> cell_of;
  // Position of each node within its cell's member list.
  std::vector<uint32_t> rank_in_cell;
  std::vector<std::vector<NodeId>> members;
  // Per attribute: segment index of each record (the marginal assignment).
  std::vector<std::vector<uint32_t>> segment_of;

  size_t num_cells() const { return members.size(); }
  size_t cell_size(CellId cell) const { return members[cell].size(); }
};

// Ranks attributes by distinct-value count / n, descending, ties by index.
std::vector<size_t> select_partition_attributes(const Dataset& dataset, size_t p);

// Splits `total_cells` into `p` factors as evenly as possible, largest first.
std::vector<size_t> factor_cell_count(size_t total_cells, size_t p);

// Quantile cut of each attribute column sorted by (value, id) at positions
// ceil(j * n / S_i).
GridSpec build_grid(const Dataset& dataset, std::span<const size_t> attributes,
                    std::span<const size_t> segments);

CellAssignment assign_cells(const Dataset& dataset, const GridSpec& grid);

// Cells whose per-attribute segment range intersects every predicate on a
// partitioned attribute. Predicates on other attributes never prune.
std::vector<CellId> cells_intersecting(const GridSpec& grid, const RangeQuery& query);

}  // namespace gridvec
