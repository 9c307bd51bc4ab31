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

#include "gridvec/search.h"

#include <algorithm>

#include "gridvec/grid.h"
#include "gridvec/histogram.h"
#include "gridvec/util.h"

namespace gridvec {

ResolvedSearchParams resolve(const SearchParams& params, const RangeQuery& query,
                             size_t num_cells, size_t intra_degree) {
  ResolvedSearchParams r;
  r.k = query.k;
  r.beam = std::max(params.beam, query.k);
  r.s_thre = params.s_thre != 0 ? params.s_thre : std::max<size_t>(1, num_cells - 1);
  r.entry_leaders = params.entry_leaders != 0 ? params.entry_leaders : query.k;
  r.entry_count = std::max<size_t>(1, intra_degree);
  r.entry_random = params.entry_random != 0 ? params.entry_random : r.entry_count;
  r.rerank_depth = std::max(params.rerank_depth, query.k);
  r.rng_seed = params.rng_seed;
  r.use_ordering = params.use_ordering;
  r.use_inter_seed = params.use_inter_seed;
  return r;
}

ComputeTier compute_tier_of(const GmgIndex& index) {
  ComputeTier tier;
  tier.codes = &index.quantizer;
  tier.attributes = index.data.attribute_table();
  tier.num_attributes = index.data.num_attributes();
  tier.metric = index.params.metric;
  return tier;
}

QueryTraversal::QueryTraversal(const RangeQuery& query, const ResolvedSearchParams& params,
                               const ComputeTier& tier, VisitedSet* visited)
    : query_(query),
      params_(params),
      tier_(tier),
      state_(params.beam, params.k, params.rerank_depth, visited),
      rng_(params.rng_seed) {
  if (state_.visited != nullptr) state_.visited->reset();
}

void QueryTraversal::attach_visited(VisitedSet* visited) {
  state_.visited = visited;
  state_.visited->reset();
}

void QueryTraversal::seed_random(const GraphView& graph, CellId cell) {
  auto accept = [&](NodeId v) { return tier_.accepts(v, query_.predicates); };
  for (NodeId v : sample_members(graph.cell_members(cell), params_.entry_count, rng_)) {
    ++state_.stats.distance_computations;
    state_.seed(v, tier_.distance(query_.q, v), accept);
  }
  started_ = true;
}

void QueryTraversal::traverse_cell(const GraphView& graph, CellId /*cell*/) {
  auto accept = [&](NodeId v) { return tier_.accepts(v, query_.predicates); };
  auto dist = [&](NodeId v) { return tier_.distance(query_.q, v); };
  best_first_expand(
      state_, [&](NodeId u) { return graph.intra_neighbors(u); }, dist, accept);
  ++state_.stats.cells_visited;
}

bool QueryTraversal::transition_entries(const GraphView& graph, CellId next_cell) {
  const auto members = graph.cell_members(next_cell);
  if (members.empty()) return false;
  std::vector<NodeId> entry_ids = sample_members(members, params_.entry_random, rng_);
  if (params_.use_inter_seed) {
    const size_t leaders = std::min(params_.entry_leaders, state_.cand.size());
    for (size_t i = 0; i < leaders; ++i) {
      for (NodeId v : graph.inter_neighbors(state_.cand[i].id, next_cell)) {
        entry_ids.push_back(v);
      }
    }
  }
  std::sort(entry_ids.begin(), entry_ids.end());
  entry_ids.erase(std::unique(entry_ids.begin(), entry_ids.end()), entry_ids.end());

  std::vector<Neighbor> entries;
  entries.reserve(entry_ids.size());
  for (NodeId v : entry_ids) {
    if (state_.visited->contains(v)) continue;
    ++state_.stats.distance_computations;
    entries.push_back({v, tier_.distance(query_.q, v)});
  }
  std::sort(entries.begin(), entries.end());
  if (entries.size() > params_.entry_count) entries.resize(params_.entry_count);

  state_.cand.clear();
  auto accept = [&](NodeId v) { return tier_.accepts(v, query_.predicates); };
  for (const auto& e : entries) state_.seed(e.id, e.distance, accept);
  return true;
}

void QueryTraversal::run_cells(const GraphView& graph, std::span<const CellId> ordered_cells) {
  for (CellId cell : ordered_cells) {
    if (graph.cell_members(cell).empty()) continue;
    if (!started_) {
      seed_random(graph, cell);
    } else if (!transition_entries(graph, cell)) {
      continue;
    }
    traverse_cell(graph, cell);
  }
}

void QueryTraversal::global_search(const GraphView& graph, std::span<const CellId> cells) {
  auto accept = [&](NodeId v) { return tier_.accepts(v, query_.predicates); };
  auto dist = [&](NodeId v) { return tier_.distance(query_.q, v); };

  // Random entries drawn from the concatenated member lists of `cells`.
  size_t total = 0;
  for (CellId c : cells) total += graph.cell_members(c).size();
  if (total == 0) return;
  const size_t want = started_ ? params_.entry_random : params_.entry_count;
  std::vector<NodeId> seeds;
  if (total <= want) {
    for (CellId c : cells) {
      for (NodeId v : graph.cell_members(c)) seeds.push_back(v);
    }
  } else {
    std::vector<size_t> picked;
    std::uniform_int_distribution<size_t> pick(0, total - 1);
    while (picked.size() < want) {
      const size_t i = pick(rng_);
      if (std::find(picked.begin(), picked.end(), i) != picked.end()) continue;
      picked.push_back(i);
      size_t rest = i;
      for (CellId c : cells) {
        const auto members = graph.cell_members(c);
        if (rest < members.size()) {
          seeds.push_back(members[rest]);
          break;
        }
        rest -= members.size();
      }
    }
  }
  if (started_ && params_.use_inter_seed) {
    const size_t leaders = std::min(params_.entry_leaders, state_.cand.size());
    for (size_t i = 0; i < leaders; ++i) {
      for (CellId c : cells) {
        for (NodeId v : graph.inter_neighbors(state_.cand[i].id, c)) seeds.push_back(v);
      }
    }
  }
  for (NodeId v : seeds) {
    if (state_.visited->contains(v)) continue;
    ++state_.stats.distance_computations;
    state_.seed(v, dist(v), accept);
  }
  started_ = true;

  std::vector<NodeId> buffer;
  auto union_neighbors = [&](NodeId u) -> std::span<const NodeId> {
    buffer.clear();
    const auto intra = graph.intra_neighbors(u);
    buffer.insert(buffer.end(), intra.begin(), intra.end());
    for (CellId c : cells) {
      const auto inter = graph.inter_neighbors(u, c);
      buffer.insert(buffer.end(), inter.begin(), inter.end());
    }
    return buffer;
  };
  best_first_expand(state_, union_neighbors, dist, accept);
  state_.stats.cells_visited += cells.size();
}

std::vector<Neighbor> QueryTraversal::candidates() const {
  std::vector<Neighbor> pool;
  for (const auto& r : state_.results.unordered()) {
    if (tier_.accepts(r.id, query_.predicates)) pool.push_back(r);
  }
  for (const auto& r : state_.recycled.unordered()) pool.push_back(r);
  std::sort(pool.begin(), pool.end());
  if (pool.size() > params_.rerank_depth) pool.resize(params_.rerank_depth);
  return pool;
}

std::vector<Neighbor> rerank(std::span<const Neighbor> candidates, std::span<const float> q,
                             size_t k, Metric metric,
                             const std::function<std::span<const float>(NodeId)>& vector_of) {
  std::vector<Neighbor> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) {
    out.push_back({c.id, distance(q, vector_of(c.id), metric)});
  }
  std::sort(out.begin(), out.end());
  if (out.size() > k) out.resize(k);
  return out;
}

QueryPlan plan_query(const GridSpec& grid, const ClusterHistogram& histogram,
                     const RangeQuery& query, const ResolvedSearchParams& params,
                     Metric metric) {
  QueryPlan plan;
  plan.cells = cells_intersecting(grid, query);
  plan.fallback = plan.cells.size() > params.s_thre;
  if (!plan.fallback && params.use_ordering && !plan.cells.empty()) {
    plan.cells = order_cells(plan.cells, query.q, histogram, metric);
  }
  return plan;
}

namespace {

VisitedSet& thread_visited(size_t n) {
  thread_local VisitedSet visited;
  if (visited.capacity() != n) visited.resize(n);
  return visited;
}

SearchResult finish(const GmgIndex& index, QueryTraversal& traversal, const RangeQuery& query,
                    SearchResult result) {
  const auto candidates = traversal.candidates();
  result.neighbors = rerank(candidates, query.q, query.k, index.params.metric,
                            [&](NodeId v) { return index.data.vector(v); });
  result.stats = traversal.state().stats;
  return result;
}

}  // namespace

SearchResult search(const GmgIndex& index, const RangeQuery& query, const SearchParams& params) {
  query.validate(index.data.dim(), index.data.num_attributes());
  const auto resolved = resolve(params, query, index.num_cells(), index.params.intra_degree);
  const IndexGraphView view(index);
  QueryTraversal traversal(query, resolved, compute_tier_of(index),
                           &thread_visited(index.size()));
  SearchResult result;
  const auto plan = plan_query(index.grid, index.histogram, query, resolved, index.params.metric);
  result.used_fallback = plan.fallback;
  result.cell_order = plan.cells;
  if (plan.fallback) {
    std::vector<CellId> all(index.num_cells());
    for (CellId c = 0; c < all.size(); ++c) all[c] = c;
    traversal.global_search(view, all);
  } else {
    traversal.run_cells(view, plan.cells);
  }
  return finish(index, traversal, query, std::move(result));
}

SearchResult search_with_order(const GmgIndex& index, const RangeQuery& query,
                               const SearchParams& params, std::span<const CellId> cell_order) {
  query.validate(index.data.dim(), index.data.num_attributes());
  const auto resolved = resolve(params, query, index.num_cells(), index.params.intra_degree);
  const IndexGraphView view(index);
  QueryTraversal traversal(query, resolved, compute_tier_of(index),
                           &thread_visited(index.size()));
  SearchResult result;
  result.cell_order.assign(cell_order.begin(), cell_order.end());
  traversal.run_cells(view, cell_order);
  return finish(index, traversal, query, std::move(result));
}

std::vector<SearchResult> search_batch(const GmgIndex& index, std::span<const RangeQuery> queries,
                                       const SearchParams& params) {
  for (const auto& query : queries) {
    query.validate(index.data.dim(), index.data.num_attributes());
  }
  std::vector<SearchResult> results(queries.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (int64_t i = 0; i < static_cast<int64_t>(queries.size()); ++i) {
    results[i] = search(index, queries[i], params);
  }
  return results;
}

}  // namespace gridvec
