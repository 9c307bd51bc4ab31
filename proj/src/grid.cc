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

#include "gridvec/grid.h"

#include <algorithm>
#include <limits>
#include <numeric>
#include <unordered_set>

namespace gridvec {

namespace {

// Record ids of one attribute column sorted by (value, id).
std::vector<NodeId> sorted_column(const Dataset& dataset, size_t attr) {
  std::vector<NodeId> order(dataset.size());
  std::iota(order.begin(), order.end(), NodeId{0});
  std::sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
    const double va = dataset.attribute(a, attr);
    const double vb = dataset.attribute(b, attr);
    return va < vb || (va == vb && a < b);
  });
  return order;
}

// Start position of segment j in a column of n values split into s segments.
size_t cut_position(size_t j, size_t n, size_t s) { return (j * n + s - 1) / s; }

}  // namespace

size_t GridSpec::num_cells() const {
  size_t total = 1;
  for (size_t s : segments) total *= s;
  return total;
}

CellId GridSpec::cell_id(std::span<const size_t> coordinate) const {
  size_t id = 0;
  for (size_t i = 0; i < segments.size(); ++i) id = id * segments[i] + coordinate[i];
  return static_cast<CellId>(id);
}

std::vector<size_t> GridSpec::coordinate(CellId cell) const {
  std::vector<size_t> coord(segments.size());
  size_t rest = cell;
  for (size_t i = segments.size(); i-- > 0;) {
    coord[i] = rest % segments[i];
    rest /= segments[i];
  }
  return coord;
}

std::vector<size_t> select_partition_attributes(const Dataset& dataset, size_t p) {
  const size_t m = dataset.num_attributes();
  if (p == 0 || p > m) {
    throw Error("cannot select " + std::to_string(p) + " partition attributes out of " +
                std::to_string(m));
  }
  if (dataset.empty()) throw Error("cannot rank attributes of an empty dataset");
  std::vector<double> score(m);
  for (size_t a = 0; a < m; ++a) {
    std::vector<double> column(dataset.size());
    for (NodeId i = 0; i < dataset.size(); ++i) column[i] = dataset.attribute(i, a);
    std::sort(column.begin(), column.end());
    const auto distinct = std::unique(column.begin(), column.end()) - column.begin();
    score[a] = static_cast<double>(distinct) / static_cast<double>(dataset.size());
  }
  std::vector<size_t> order(m);
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return score[a] > score[b]; });
  order.resize(p);
  return order;
}

std::vector<size_t> factor_cell_count(size_t total_cells, size_t p) {
  if (total_cells == 0 || p == 0) throw Error("cell count and p must be positive");
  std::vector<size_t> primes;
  size_t rest = total_cells;
  for (size_t f = 2; f * f <= rest; ++f) {
    while (rest % f == 0) {
      primes.push_back(f);
      rest /= f;
    }
  }
  if (rest > 1) primes.push_back(rest);
  std::sort(primes.rbegin(), primes.rend());

  std::vector<size_t> factors(p, 1);
  for (size_t prime : primes) {
    auto smallest = std::min_element(factors.begin(), factors.end());
    *smallest *= prime;
  }
  std::sort(factors.rbegin(), factors.rend());
  return factors;
}

GridSpec build_grid(const Dataset& dataset, std::span<const size_t> attributes,
                    std::span<const size_t> segments) {
  if (dataset.empty()) throw Error("build_grid: empty dataset");
  if (attributes.size() != segments.size()) {
    throw Error("build_grid: one segment count is required per attribute");
  }
  std::unordered_set<size_t> seen;
  for (size_t a : attributes) {
    if (a >= dataset.num_attributes()) throw Error("build_grid: attribute out of range");
    if (!seen.insert(a).second) throw Error("build_grid: attribute listed twice");
  }
  for (size_t s : segments) {
    if (s == 0) throw Error("build_grid: segment counts must be >= 1");
  }

  GridSpec grid;
  grid.attributes.assign(attributes.begin(), attributes.end());
  grid.segments.assign(segments.begin(), segments.end());
  const size_t n = dataset.size();
  for (size_t i = 0; i < attributes.size(); ++i) {
    const size_t attr = attributes[i];
    const size_t s = segments[i];
    const auto order = sorted_column(dataset, attr);
    std::vector<double> lo(s, std::numeric_limits<double>::infinity());
    std::vector<double> hi(s, -std::numeric_limits<double>::infinity());
    std::vector<double> splits;
    for (size_t j = 0; j < s; ++j) {
      const size_t begin = cut_position(j, n, s);
      const size_t end = cut_position(j + 1, n, s);
      if (begin < end) {
        lo[j] = dataset.attribute(order[begin], attr);
        hi[j] = dataset.attribute(order[end - 1], attr);
      }
      if (j + 1 < s) {
        // An empty leading segment carries the smallest value as its split.
        splits.push_back(end > 0 ? dataset.attribute(order[end - 1], attr)
                                 : dataset.attribute(order[0], attr));
      }
    }
    grid.boundaries.push_back(std::move(splits));
    grid.segment_lo.push_back(std::move(lo));
    grid.segment_hi.push_back(std::move(hi));
  }
  return grid;
}

CellAssignment assign_cells(const Dataset& dataset, const GridSpec& grid) {
  const size_t n = dataset.size();
  const size_t p = grid.num_partitioned();
  CellAssignment out;
  out.segment_of.assign(p, std::vector<uint32_t>(n, 0));
  for (size_t i = 0; i < p; ++i) {
    const size_t s = grid.segments[i];
    const auto order = sorted_column(dataset, grid.attributes[i]);
    for (size_t j = 0; j < s; ++j) {
      const size_t end = cut_position(j + 1, n, s);
      for (size_t pos = cut_position(j, n, s); pos < end; ++pos) {
        out.segment_of[i][order[pos]] = static_cast<uint32_t>(j);
      }
    }
  }

  out.members.assign(grid.num_cells(), {});
  out.cell_of.resize(n);
  out.rank_in_cell.resize(n);
  std::vector<size_t> coord(p);
  for (NodeId id = 0; id < n; ++id) {
    for (size_t i = 0; i < p; ++i) coord[i] = out.segment_of[i][id];
    const CellId cell = grid.cell_id(coord);
    out.cell_of[id] = cell;
    out.rank_in_cell[id] = static_cast<uint32_t>(out.members[cell].size());
    out.members[cell].push_back(id);
  }
  return out;
}

std::vector<CellId> cells_intersecting(const GridSpec& grid, const RangeQuery& query) {
  const size_t p = grid.num_partitioned();
  // allowed[i][j]: segment j of partitioned attribute i can hold a match.
  std::vector<std::vector<bool>> allowed(p);
  for (size_t i = 0; i < p; ++i) {
    allowed[i].assign(grid.segments[i], true);
    for (const auto& pred : query.predicates) {
      if (pred.attribute != grid.attributes[i]) continue;
      for (size_t j = 0; j < grid.segments[i]; ++j) {
        const double lo = grid.segment_lo[i][j];
        const double hi = grid.segment_hi[i][j];
        allowed[i][j] = allowed[i][j] && lo <= hi && lo <= pred.high && pred.low <= hi;
      }
    }
  }
  std::vector<CellId> cells;
  const size_t total = grid.num_cells();
  for (CellId cell = 0; cell < total; ++cell) {
    const auto coord = grid.coordinate(cell);
    bool keep = true;
    for (size_t i = 0; i < p && keep; ++i) keep = allowed[i][coord[i]];
    if (keep) cells.push_back(cell);
  }
  return cells;
}

}  // namespace gridvec
