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

#include "gridvec/index.h"

#include <algorithm>
#include <numeric>
#include <random>

#include "gridvec/search_state.h"
#include "gridvec/util.h"

namespace gridvec {

size_t InterCellEdges::total_edges() const {
  return static_cast<size_t>(
      std::count_if(slots.begin(), slots.end(), [](NodeId id) { return id != kInvalidNode; }));
}

size_t GmgIndex::total_intra_edges() const {
  size_t total = 0;
  for (const auto& g : intra) total += g.adjacency.size();
  return total;
}

std::span<const NodeId> IndexGraphView::intra_neighbors(NodeId node) const {
  const CellId cell = index_.assignment.cell_of[node];
  return index_.intra[cell].row(index_.assignment.rank_in_cell[node]);
}

std::span<const NodeId> IndexGraphView::inter_neighbors(NodeId node, CellId cell) const {
  return index_.inter.edges(node, cell);
}

std::span<const NodeId> IndexGraphView::cell_members(CellId cell) const {
  return index_.assignment.members[cell];
}

CellId IndexGraphView::cell_of(NodeId node) const { return index_.assignment.cell_of[node]; }

size_t IndexGraphView::num_cells() const { return index_.assignment.num_cells(); }

namespace {

struct KnnEntry {
  float distance;
  uint32_t local;
  bool fresh;
};

bool entry_less(const KnnEntry& a, const KnnEntry& b) {
  return a.distance < b.distance || (a.distance == b.distance && a.local < b.local);
}

// Inserts (local, dist) into a full sorted list when it improves it.
bool knn_update(std::vector<KnnEntry>& list, uint32_t local, float dist) {
  const KnnEntry candidate{dist, local, true};
  if (!entry_less(candidate, list.back())) return false;
  for (const auto& e : list) {
    if (e.local == local) return false;
  }
  list.insert(std::upper_bound(list.begin(), list.end(), candidate, entry_less), candidate);
  list.pop_back();
  return true;
}

void sample_into(std::vector<uint32_t>& values, size_t cap, std::mt19937_64& rng) {
  if (values.size() > cap) {
    std::shuffle(values.begin(), values.end(), rng);
    values.resize(cap);
  }
}

void sort_unique(std::vector<uint32_t>& values) {
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
}

}  // namespace

std::vector<std::vector<Neighbor>> nn_descent(std::span<const NodeId> members,
                                              const Dataset& data, size_t k,
                                              size_t iterations, uint64_t seed, Metric metric) {
  const size_t c = members.size();
  std::vector<std::vector<Neighbor>> out(c);
  if (c <= 1) return out;
  const size_t kk = std::min(k, c - 1);
  const size_t dim = data.dim();
  auto dist = [&](uint32_t a, uint32_t b) {
    return distance_raw(data.vector(members[a]).data(), data.vector(members[b]).data(), dim,
                        metric);
  };

  std::mt19937_64 rng(seed);
  std::vector<std::vector<KnnEntry>> lists(c);
  std::uniform_int_distribution<uint32_t> pick(0, static_cast<uint32_t>(c - 1));
  for (uint32_t i = 0; i < c; ++i) {
    auto& list = lists[i];
    list.reserve(kk + 1);
    if (kk == c - 1) {
      for (uint32_t j = 0; j < c; ++j) {
        if (j != i) list.push_back({dist(i, j), j, true});
      }
    } else {
      std::vector<uint32_t> chosen;
      while (chosen.size() < kk) {
        const uint32_t j = pick(rng);
        if (j == i || std::find(chosen.begin(), chosen.end(), j) != chosen.end()) continue;
        chosen.push_back(j);
        list.push_back({dist(i, j), j, true});
      }
    }
    std::sort(list.begin(), list.end(), entry_less);
  }

  if (kk < c - 1) {
    std::vector<std::vector<uint32_t>> fresh(c), stale(c), rfresh(c), rstale(c);
    const size_t stop_threshold = std::max<size_t>(1, c * kk / 1000);
    for (size_t iter = 0; iter < iterations; ++iter) {
      for (uint32_t i = 0; i < c; ++i) {
        fresh[i].clear();
        stale[i].clear();
        rfresh[i].clear();
        rstale[i].clear();
      }
      for (uint32_t i = 0; i < c; ++i) {
        for (auto& e : lists[i]) {
          if (e.fresh) {
            fresh[i].push_back(e.local);
            e.fresh = false;
          } else {
            stale[i].push_back(e.local);
          }
        }
      }
      for (uint32_t i = 0; i < c; ++i) {
        for (uint32_t j : fresh[i]) rfresh[j].push_back(i);
        for (uint32_t j : stale[i]) rstale[j].push_back(i);
      }
      size_t updates = 0;
      std::vector<uint32_t> new_set, old_set;
      for (uint32_t i = 0; i < c; ++i) {
        sample_into(rfresh[i], kk, rng);
        sample_into(rstale[i], kk, rng);
        new_set = fresh[i];
        new_set.insert(new_set.end(), rfresh[i].begin(), rfresh[i].end());
        old_set = stale[i];
        old_set.insert(old_set.end(), rstale[i].begin(), rstale[i].end());
        sort_unique(new_set);
        sort_unique(old_set);
        for (size_t a = 0; a < new_set.size(); ++a) {
          const uint32_t u = new_set[a];
          for (size_t b = a + 1; b < new_set.size(); ++b) {
            const uint32_t v = new_set[b];
            const float d = dist(u, v);
            updates += knn_update(lists[u], v, d);
            updates += knn_update(lists[v], u, d);
          }
          for (uint32_t v : old_set) {
            if (u == v) continue;
            const float d = dist(u, v);
            updates += knn_update(lists[u], v, d);
            updates += knn_update(lists[v], u, d);
          }
        }
      }
      if (updates < stop_threshold) break;
    }
  }

  for (uint32_t i = 0; i < c; ++i) {
    out[i].reserve(kk);
    for (const auto& e : lists[i]) out[i].push_back({members[e.local], e.distance});
    std::sort(out[i].begin(), out[i].end());
  }
  return out;
}

IntraCellGraph build_intra_graph(CellId cell, std::span<const NodeId> members,
                                 const Dataset& data, const BuildParams& params) {
  if (params.intra_degree == 0) throw Error("intra degree must be >= 1");
  IntraCellGraph graph;
  graph.cell = cell;
  const size_t c = members.size();
  if (c <= 1) return graph;
  const size_t degree = std::min(params.intra_degree, c - 1);
  graph.degree = degree;
  graph.adjacency.resize(c * degree);
  const size_t dim = data.dim();

  if (c <= params.intra_degree + 1) {
    for (size_t i = 0; i < c; ++i) {
      std::vector<Neighbor> all;
      for (size_t j = 0; j < c; ++j) {
        if (j == i) continue;
        all.push_back({members[j], distance_raw(data.vector(members[i]).data(),
                                                data.vector(members[j]).data(), dim,
                                                params.metric)});
      }
      std::sort(all.begin(), all.end());
      for (size_t t = 0; t < degree; ++t) graph.adjacency[i * degree + t] = all[t].id;
    }
    return graph;
  }

  const auto knn = nn_descent(members, data, 2 * params.intra_degree, params.knn_iterations,
                              mix_seed(params.rng_seed, 0x1a7a, cell), params.metric);
  std::vector<Neighbor> kept;
  std::vector<bool> taken;
  for (size_t i = 0; i < c; ++i) {
    const auto& list = knn[i];
    kept.clear();
    taken.assign(list.size(), false);
    for (size_t t = 0; t < list.size() && kept.size() < degree; ++t) {
      const Neighbor& y = list[t];
      bool occluded = false;
      for (const Neighbor& z : kept) {
        if (distance_raw(data.vector(z.id).data(), data.vector(y.id).data(), dim,
                         params.metric) < y.distance) {
          occluded = true;
          break;
        }
      }
      if (!occluded) {
        kept.push_back(y);
        taken[t] = true;
      }
    }
    for (size_t t = 0; t < list.size() && kept.size() < degree; ++t) {
      if (!taken[t]) kept.push_back(list[t]);
    }
    std::sort(kept.begin(), kept.end());
    for (size_t t = 0; t < degree; ++t) graph.adjacency[i * degree + t] = kept[t].id;
  }
  return graph;
}

std::vector<Neighbor> search_cell_unfiltered(const GraphView& graph, CellId cell,
                                             std::span<const float> query, const Dataset& data,
                                             size_t num_results, size_t beam,
                                             size_t num_entries, uint64_t seed, Metric metric) {
  const auto members = graph.cell_members(cell);
  if (members.empty() || num_results == 0) return {};
  thread_local VisitedSet visited;
  if (visited.capacity() != data.size()) visited.resize(data.size());
  visited.reset();

  SearchState state(std::max(beam, num_results), num_results, 0, &visited);
  auto accept = [](NodeId) { return false; };
  auto dist = [&](NodeId v) {
    return distance_raw(query.data(), data.vector(v).data(), data.dim(), metric);
  };
  std::mt19937_64 rng(seed);
  for (NodeId entry : sample_members(members, num_entries, rng)) {
    state.seed(entry, dist(entry), accept);
  }
  best_first_expand(
      state, [&](NodeId u) { return graph.intra_neighbors(u); }, dist, accept);
  return state.results.sorted();
}

InterCellEdges build_inter_edges(const GraphView& graph, const Dataset& data,
                                 const CellAssignment& assignment, const BuildParams& params) {
  if (params.inter_degree == 0) throw Error("inter degree must be >= 1");
  const size_t n = data.size();
  const size_t num_cells = assignment.num_cells();
  const size_t l = params.inter_degree;
  InterCellEdges edges;
  edges.num_cells = num_cells;
  edges.inter_degree = l;
  edges.slots.assign(n * num_cells * l, kInvalidNode);
  const size_t dim = data.dim();

#pragma omp parallel for schedule(dynamic, 64)
  for (int64_t node_index = 0; node_index < static_cast<int64_t>(n); ++node_index) {
    const auto node = static_cast<NodeId>(node_index);
    const auto query = data.vector(node);
    for (CellId cell = 0; cell < num_cells; ++cell) {
      if (cell == assignment.cell_of[node]) continue;
      const auto& members = assignment.members[cell];
      if (members.empty()) continue;
      std::vector<Neighbor> found;
      if (members.size() <= l) {
        for (NodeId m : members) {
          found.push_back({m, distance_raw(query.data(), data.vector(m).data(), dim,
                                           params.metric)});
        }
        std::sort(found.begin(), found.end());
      } else {
        found = search_cell_unfiltered(graph, cell, query, data, l, params.ef_construction,
                                       params.intra_degree,
                                       mix_seed(params.rng_seed, node, cell), params.metric);
        if (found.size() < l) {
          // Disconnected component: top up from an exhaustive scan of the cell.
          std::vector<Neighbor> all;
          for (NodeId m : members) {
            all.push_back({m, distance_raw(query.data(), data.vector(m).data(), dim,
                                           params.metric)});
          }
          std::sort(all.begin(), all.end());
          for (const auto& cand : all) {
            if (found.size() >= l) break;
            if (std::none_of(found.begin(), found.end(),
                             [&](const Neighbor& f) { return f.id == cand.id; })) {
              found.push_back(cand);
            }
          }
          std::sort(found.begin(), found.end());
        }
      }
      auto* slot = edges.slots.data() + (static_cast<size_t>(node) * num_cells + cell) * l;
      for (size_t t = 0; t < std::min(l, found.size()); ++t) slot[t] = found[t].id;
    }
  }
  return edges;
}

GmgIndex build_index(Dataset data, const GridParams& grid_params, const BuildParams& params,
                     const HistogramParams& histogram_params) {
  if (data.empty()) throw Error("build_index: empty dataset");
  if (params.intra_degree == 0 || params.inter_degree == 0) {
    throw Error("build_index: intra and inter degree must be >= 1");
  }
  GmgIndex index;
  index.params = params;

  std::vector<size_t> attributes = grid_params.attributes;
  const size_t m = data.num_attributes();
  if (attributes.empty() && m > 0) {
    const size_t p = grid_params.p == 0 ? std::min<size_t>(m, 4) : grid_params.p;
    attributes = select_partition_attributes(data, p);
  }
  std::vector<size_t> segments = grid_params.segments;
  if (segments.empty() && !attributes.empty()) {
    segments = factor_cell_count(grid_params.num_cells, attributes.size());
  }
  if (segments.size() != attributes.size()) {
    throw Error("build_index: segment list does not match attribute list");
  }
  index.grid = build_grid(data, attributes, segments);
  index.assignment = assign_cells(data, index.grid);

  const size_t num_cells = index.assignment.num_cells();
  index.intra.resize(num_cells);
#pragma omp parallel for schedule(dynamic, 1)
  for (int64_t cell = 0; cell < static_cast<int64_t>(num_cells); ++cell) {
    index.intra[cell] = build_intra_graph(static_cast<CellId>(cell),
                                          index.assignment.members[cell], data, params);
  }

  IndexGraphView view(index);
  index.inter = build_inter_edges(view, data, index.assignment, params);
  index.histogram = build_histogram(data, index.assignment, histogram_params);
  index.quantizer = ScalarQuantizer::train_and_encode(data);
  index.data = std::move(data);
  return index;
}

}  // namespace gridvec
