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
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "gridvec/core.h"
#include "gridvec/index.h"
#include "gridvec/search_state.h"

namespace gridvec {

struct SearchParams {
  size_t beam = 64;          // Cand capacity
  size_t s_thre = 0;         // 0: cells - 1, so fallback only when every cell intersects
  size_t entry_leaders = 0;  // L; 0: k
  size_t entry_random = 0;   // random entries per transition; 0: intra degree
  size_t rerank_depth = 0;   // candidates re-scored exactly; 0: k
  uint64_t rng_seed = 1234;
  bool use_ordering = true;    // cluster-guided cell order; false: ascending id
  bool use_inter_seed = true;  // inter-edge entries at cell transitions
};

// Parameters after defaults are resolved against an index and a query.
struct ResolvedSearchParams {
  size_t k = 10;
  size_t beam = 64;
  size_t s_thre = 1;
  size_t entry_leaders = 10;
  size_t entry_random = 16;
  size_t entry_count = 16;  // d: entries kept per transition
  size_t rerank_depth = 10;
  uint64_t rng_seed = 1234;
  bool use_ordering = true;
  bool use_inter_seed = true;
};

ResolvedSearchParams resolve(const SearchParams& params, const RangeQuery& query,
                             size_t num_cells, size_t intra_degree);

struct SearchResult {
  std::vector<Neighbor> neighbors;  // exact distances, ascending
  SearchStats stats;
  bool used_fallback = false;
  std::vector<CellId> cell_order;
};

// What the traversal (compute tier) sees: quantized codes, attributes for the
// filter check, and the metric.
struct ComputeTier {
  const ScalarQuantizer* codes = nullptr;
  std::span<const double> attributes;
  size_t num_attributes = 0;
  Metric metric = Metric::kSquaredEuclidean;

  float distance(std::span<const float> q, NodeId v) const {
    return codes->distance(q, v, metric);
  }
  bool accepts(NodeId v, std::span<const Predicate> predicates) const {
    return satisfies(attributes.subspan(static_cast<size_t>(v) * num_attributes, num_attributes),
                     predicates);
  }
};

ComputeTier compute_tier_of(const GmgIndex& index);

// Per-query traversal context; owns the state that persists across cells
// (and across batches in the out-of-core executor).
class QueryTraversal {
 public:
  QueryTraversal(const RangeQuery& query, const ResolvedSearchParams& params,
                 const ComputeTier& tier, VisitedSet* visited);

  SearchState& state() { return state_; }
  const SearchState& state() const { return state_; }
  const RangeQuery& query() const { return query_; }
  const ResolvedSearchParams& params() const { return params_; }

  // Swaps in a (reset) visited set. Cells never repeat across batches, so a
  // fresh set per batch behaves like one set held for the whole query.
  void attach_visited(VisitedSet* visited);

  // Seeds Cand with random members of `cell` (first cell of the sequence).
  void seed_random(const GraphView& graph, CellId cell);

  // Best-first expansion over the intra edges of `cell`.
  void traverse_cell(const GraphView& graph, CellId cell);

  // CandEntry = random members of next_cell plus the next_cell inter edges of
  // the first L Cand entries; Cand becomes the d nearest of CandEntry. Returns
  // false when next_cell is empty.
  bool transition_entries(const GraphView& graph, CellId next_cell);

  // Whole-graph search used when too many cells intersect: entries are random
  // nodes of `cells`, expansion follows intra and inter edges inside `cells`.
  void global_search(const GraphView& graph, std::span<const CellId> cells);

  // Runs seed/traverse/transition over an ordered cell sequence, continuing
  // from any previous call.
  void run_cells(const GraphView& graph, std::span<const CellId> ordered_cells);

  // Filter-surviving members of R plus recCand, best `rerank_depth` by code
  // distance.
  std::vector<Neighbor> candidates() const;

  bool started() const { return started_; }

 private:
  RangeQuery query_;
  ResolvedSearchParams params_;
  ComputeTier tier_;
  SearchState state_;
  std::mt19937_64 rng_;
  bool started_ = false;
};

// Re-scores candidates with exact distances on original vectors; keeps k.
std::vector<Neighbor> rerank(std::span<const Neighbor> candidates, std::span<const float> q,
                             size_t k, Metric metric,
                             const std::function<std::span<const float>(NodeId)>& vector_of);

SearchResult search(const GmgIndex& index, const RangeQuery& query, const SearchParams& params);

// Sequential traversal over an explicit cell order (no fallback, no ordering).
SearchResult search_with_order(const GmgIndex& index, const RangeQuery& query,
                               const SearchParams& params, std::span<const CellId> cell_order);

std::vector<SearchResult> search_batch(const GmgIndex& index, std::span<const RangeQuery> queries,
                                       const SearchParams& params);

// Cell sequence the query would visit, and whether it takes the fallback path.
struct QueryPlan {
  std::vector<CellId> cells;  // C_Q, ordered when not fallback
  bool fallback = false;
};
QueryPlan plan_query(const GridSpec& grid, const ClusterHistogram& histogram,
                     const RangeQuery& query, const ResolvedSearchParams& params, Metric metric);

}  // namespace gridvec
