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

#include "gridvec/schedule.h"

#include <algorithm>
#include <limits>
#include <string>

namespace gridvec {

IncidenceMatrix::IncidenceMatrix(size_t num_queries, size_t num_cells)
    : num_queries_(num_queries), num_cells_(num_cells), bits_(num_queries * num_cells, 0) {}

IncidenceMatrix IncidenceMatrix::from_rows(const std::vector<std::vector<uint8_t>>& rows) {
  const size_t cells = rows.empty() ? 0 : rows.front().size();
  IncidenceMatrix a(rows.size(), cells);
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cells) {
      throw Error("incidence row " + std::to_string(i) + " has " + std::to_string(rows[i].size()) +
                  " columns, expected " + std::to_string(cells));
    }
    for (CellId j = 0; j < cells; ++j) a.set(i, j, rows[i][j] != 0);
  }
  return a;
}

void IncidenceMatrix::set(size_t query, CellId cell, bool value) {
  bits_[query * num_cells_ + cell] = value ? 1 : 0;
}

std::vector<CellId> IncidenceMatrix::cells_of(size_t query) const {
  std::vector<CellId> out;
  for (CellId j = 0; j < num_cells_; ++j) {
    if (at(query, j)) out.push_back(j);
  }
  return out;
}

std::vector<CellId> IncidenceMatrix::referenced_cells() const {
  std::vector<CellId> out;
  for (CellId j = 0; j < num_cells_; ++j) {
    for (size_t i = 0; i < num_queries_; ++i) {
      if (at(i, j)) {
        out.push_back(j);
        break;
      }
    }
  }
  return out;
}

IncidenceMatrix build_incidence(std::span<const RangeQuery> queries, const GridSpec& grid,
                                size_t s_thre) {
  IncidenceMatrix a(queries.size(), grid.num_cells());
  for (size_t i = 0; i < queries.size(); ++i) {
    const auto cells = cells_intersecting(grid, queries[i]);
    if (cells.size() > s_thre) {
      for (CellId j = 0; j < grid.num_cells(); ++j) a.set(i, j);
    } else {
      for (CellId j : cells) a.set(i, j);
    }
  }
  return a;
}

namespace {

void check_cells(const IncidenceMatrix& a, std::span<const CellId> cells) {
  for (CellId c : cells) {
    if (c >= a.num_cells()) {
      throw Error("cell " + std::to_string(c) + " outside incidence matrix with " +
                  std::to_string(a.num_cells()) + " cells");
    }
  }
}

// Per-batch count of member cells touched by each query.
struct BatchTally {
  std::vector<uint16_t> hits;
  size_t active = 0;
  size_t size = 0;

  explicit BatchTally(size_t num_queries) : hits(num_queries, 0) {}

  size_t gain(const IncidenceMatrix& a, CellId cell) const {
    size_t g = 0;
    for (size_t i = 0; i < hits.size(); ++i) g += (a.at(i, cell) && hits[i] == 0) ? 1 : 0;
    return g;
  }
  void add(const IncidenceMatrix& a, CellId cell) {
    for (size_t i = 0; i < hits.size(); ++i) {
      if (a.at(i, cell) && hits[i]++ == 0) ++active;
    }
    ++size;
  }
  void remove(const IncidenceMatrix& a, CellId cell) {
    for (size_t i = 0; i < hits.size(); ++i) {
      if (a.at(i, cell) && --hits[i] == 0) --active;
    }
    --size;
  }
};

size_t batch_count(size_t cells, size_t b) {
  if (b == 0) throw Error("batch size must be >= 1");
  return (cells + b - 1) / b;
}

}  // namespace

std::vector<uint32_t> active_queries(const IncidenceMatrix& a, std::span<const CellId> batch) {
  check_cells(a, batch);
  std::vector<uint32_t> out;
  for (size_t i = 0; i < a.num_queries(); ++i) {
    for (CellId c : batch) {
      if (a.at(i, c)) {
        out.push_back(static_cast<uint32_t>(i));
        break;
      }
    }
  }
  return out;
}

size_t active_count(const IncidenceMatrix& a, std::span<const CellId> batch) {
  return active_queries(a, batch).size();
}

BatchPlan make_plan(const IncidenceMatrix& a, std::vector<std::vector<CellId>> batches) {
  BatchPlan plan;
  plan.batches = std::move(batches);
  for (const auto& batch : plan.batches) {
    plan.active.push_back(active_queries(a, batch));
    plan.total_cost += plan.active.back().size();
  }
  return plan;
}

BatchPlan schedule_greedy(const IncidenceMatrix& a, std::span<const CellId> cells, size_t b) {
  check_cells(a, cells);
  const size_t num_batches = batch_count(cells.size(), b);
  std::vector<BatchTally> tally(num_batches, BatchTally(a.num_queries()));
  std::vector<std::vector<CellId>> batches(num_batches);
  for (CellId cell : cells) {
    size_t min_gain = std::numeric_limits<size_t>::max();
    size_t min_id = num_batches;  // unset: compares as infinitely active
    for (size_t k = 0; k < num_batches; ++k) {
      if (tally[k].size >= b) continue;
      const size_t gain = tally[k].gain(a, cell);
      if (gain < min_gain ||
          (gain == min_gain && (min_id == num_batches || tally[k].active < tally[min_id].active))) {
        min_gain = gain;
        min_id = k;
      }
    }
    tally[min_id].add(a, cell);
    batches[min_id].push_back(cell);
  }
  return make_plan(a, std::move(batches));
}

BatchPlan schedule_identity(const IncidenceMatrix& a, std::span<const CellId> cells, size_t b) {
  check_cells(a, cells);
  std::vector<std::vector<CellId>> batches(batch_count(cells.size(), b));
  for (size_t t = 0; t < cells.size(); ++t) batches[t / b].push_back(cells[t]);
  return make_plan(a, std::move(batches));
}

BatchPlan schedule_exact(const IncidenceMatrix& a, std::span<const CellId> cells, size_t b) {
  check_cells(a, cells);
  if (cells.size() > kExactScheduleLimit) {
    throw Error("schedule_exact: " + std::to_string(cells.size()) + " cells exceeds the limit of " +
                std::to_string(kExactScheduleLimit));
  }
  const size_t num_batches = batch_count(cells.size(), b);
  std::vector<BatchTally> tally(num_batches, BatchTally(a.num_queries()));
  std::vector<size_t> assign(cells.size(), 0);
  std::vector<size_t> best_assign;
  size_t best = std::numeric_limits<size_t>::max();
  size_t cost = 0;

  // Batches are interchangeable, so cell t only opens batch `used` (the next
  // unopened one) or joins an already opened batch.
  auto recurse = [&](auto&& self, size_t t, size_t used) -> void {
    if (cost >= best) return;
    if (t == cells.size()) {
      best = cost;
      best_assign = assign;
      return;
    }
    const size_t limit = std::min(used + 1, num_batches);
    for (size_t k = 0; k < limit; ++k) {
      if (tally[k].size >= b) continue;
      const size_t gain = tally[k].gain(a, cells[t]);
      tally[k].add(a, cells[t]);
      cost += gain;
      assign[t] = k;
      self(self, t + 1, std::max(used, k + 1));
      cost -= gain;
      tally[k].remove(a, cells[t]);
    }
  };
  recurse(recurse, 0, 0);

  std::vector<std::vector<CellId>> batches(num_batches);
  for (size_t t = 0; t < cells.size(); ++t) batches[best_assign[t]].push_back(cells[t]);
  return make_plan(a, std::move(batches));
}

}  // namespace gridvec
