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

#include <algorithm>
#include <random>
#include <set>
#include <vector>

#include "catch_amalgamated.hpp"
#include "gridvec/eval.h"
#include "gridvec/pipeline.h"

using namespace gridvec;
using Catch::Matchers::ContainsSubstring;

namespace {

struct Fixture {
  GmgIndex index;
  IndexFile file;
  std::vector<RangeQuery> queries;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    eval::DataSpec spec;
    spec.n = 2000;
    spec.dim = 16;
    spec.seed = 31;
    GridParams g;
    g.num_cells = 8;
    BuildParams b;
    b.intra_degree = 12;
    HistogramParams h;
    h.num_clusters = 16;
    auto index = build_index(eval::generate_dataset(spec), g, b, h);
    auto file = IndexFile::from_bytes(serialize(index));
    eval::QuerySpec qs;
    qs.count = 80;
    qs.seed = 32;
    std::vector<RangeQuery> queries;
    const auto vectors = eval::generate_query_vectors(spec, qs.count, 33);
    for (auto& q : eval::generate_queries(qs, index.data, vectors)) queries.push_back(q.query);
    return Fixture{std::move(index), std::move(file), std::move(queries)};
  }();
  return f;
}

// Independent recount of the edges a blob for `batch` should carry.
std::pair<size_t, size_t> expected_edges(const GmgIndex& index, const std::vector<CellId>& batch) {
  const std::set<CellId> in(batch.begin(), batch.end());
  size_t intra = 0, inter = 0;
  for (CellId c : batch) {
    for (NodeId v : index.intra[c].adjacency) intra += v != kInvalidNode;
    for (NodeId v : index.assignment.members[c]) {
      for (CellId j : batch) {
        if (j == c) continue;
        for (NodeId u : index.inter.edges(v, j)) inter += in.count(index.assignment.cell_of[u]);
      }
    }
  }
  return {intra, inter};
}

std::vector<CellId> all_cells(size_t n) {
  std::vector<CellId> cells(n);
  for (CellId c = 0; c < n; ++c) cells[c] = c;
  return cells;
}

}  // namespace

TEST_CASE("partial index carries exactly the batch's edges", "[pipeline]") {
  const auto& f = fixture();
  const auto& asg = f.index.assignment;
  for (const std::vector<CellId>& batch :
       {all_cells(8), std::vector<CellId>{5}, std::vector<CellId>{1, 6}, std::vector<CellId>{7, 0, 3}}) {
    const auto blob = assemble_partial_index(f.file, asg, batch, size_t{1} << 30);
    const auto [intra, inter] = expected_edges(f.index, batch);
    CHECK(blob.intra_edge_count() == intra);
    CHECK(blob.inter_edge_count() == inter);
    size_t members = 0;
    for (CellId c : batch) members += asg.members[c].size();
    CHECK(blob.globals.size() == members);
    CHECK(blob.byte_size() <= partial_index_bound(f.file, asg, batch.size()));
  }
  const auto whole = assemble_partial_index(f.file, asg, all_cells(8), size_t{1} << 30);
  CHECK(whole.intra_edge_count() == f.index.total_intra_edges());
  CHECK(whole.inter_edge_count() == f.index.inter.total_edges());
  CHECK(assemble_partial_index(f.file, asg, std::vector<CellId>{5}, 1 << 30).inter_edge_count() == 0);
}

TEST_CASE("partial view translates ids back to global", "[pipeline]") {
  const auto& f = fixture();
  const auto& asg = f.index.assignment;
  const std::vector<CellId> batch = {2, 4};
  const auto blob = assemble_partial_index(f.file, asg, batch, size_t{1} << 30);
  const PartialGraphView view(blob, asg, f.file);
  CHECK(view.num_cells() == 8);
  for (CellId c : batch) {
    const auto members = view.cell_members(c);
    CHECK(std::vector<NodeId>(members.begin(), members.end()) == asg.members[c]);
    for (NodeId v : asg.members[c]) {
      const auto got = view.intra_neighbors(v);
      const auto want = f.index.intra[c].row(asg.rank_in_cell[v]);
      CHECK(std::vector<NodeId>(got.begin(), got.end()) ==
            std::vector<NodeId>(want.begin(), want.end()));
      CHECK(view.cell_of(v) == c);
    }
  }
  const NodeId outside = asg.members[0].front();
  CHECK(view.intra_neighbors(outside).empty());
  const auto carried = view.inter_neighbors(outside, 4);
  const auto want = f.index.inter.edges(outside, 4);
  CHECK(std::vector<NodeId>(carried.begin(), carried.end()) ==
        std::vector<NodeId>(want.begin(), want.end()));
}

TEST_CASE("memory cap violations name the batch", "[pipeline]") {
  const auto& f = fixture();
  const std::vector<CellId> batch = {3};
  CHECK_THROWS_WITH(assemble_partial_index(f.file, f.index.assignment, batch, 64, 3),
                    ContainsSubstring("batch 3") && ContainsSubstring("memory_cap"));
  OutOfCoreParams p;
  p.budget.memory_cap = 64;
  CHECK_THROWS_AS(run_out_of_core(f.file, f.queries, SearchParams{}, p), Error);
  p.budget.memory_cap = size_t{1} << 30;
  p.budget.stage_depth = 0;
  CHECK_THROWS_AS(run_out_of_core(f.file, f.queries, SearchParams{}, p), Error);
}

TEST_CASE("one batch holding every cell matches in-memory search", "[pipeline]") {
  const auto& f = fixture();
  OutOfCoreParams p;
  p.batch_cells = 8;
  p.budget.memory_cap = size_t{1} << 30;
  const auto out = run_out_of_core(f.file, f.queries, SearchParams{}, p);
  REQUIRE(out.plan.batches.size() == 1);
  for (size_t i = 0; i < f.queries.size(); ++i) {
    CHECK(out.results[i].neighbors == search(f.index, f.queries[i], SearchParams{}).neighbors);
  }
}

TEST_CASE("batched execution is independent of pipeline depth", "[pipeline]") {
  const auto& f = fixture();
  OutOfCoreParams p;
  p.batch_cells = 2;
  p.budget.memory_cap = size_t{1} << 30;
  p.budget.stage_depth = 1;
  const auto serial = run_out_of_core(f.file, f.queries, SearchParams{}, p);
  p.budget.stage_depth = 3;
  const auto overlapped = run_out_of_core(f.file, f.queries, SearchParams{}, p);
  CHECK(serial.plan.batches.size() == 4);
  double recall = 0;
  for (size_t i = 0; i < f.queries.size(); ++i) {
    CHECK(serial.results[i].neighbors == overlapped.results[i].neighbors);
    const auto& r = serial.results[i].neighbors;
    CHECK(r.size() <= f.queries[i].k);
    for (const auto& n : r) {
      CHECK(satisfies(f.index.data.attributes(n.id), f.queries[i].predicates));
      CHECK(n.distance == distance(f.queries[i].q, f.index.data.vector(n.id)));
    }
    recall += eval::recall_at_k(eval::ids_of(r),
                                eval::ids_of(eval::brute_force_rfnns(f.index.data, f.queries[i])),
                                f.queries[i].k);
  }
  CHECK(recall / f.queries.size() >= 0.8);
}

TEST_CASE("batches activate exactly the queries that touch them", "[pipeline]") {
  const auto& f = fixture();
  OutOfCoreParams p;
  p.batch_cells = 2;
  p.budget.memory_cap = size_t{1} << 30;
  p.simulated = true;
  SearchParams sp;
  const auto out = run_out_of_core(f.file, f.queries, sp, p);
  const auto a = build_incidence(f.queries, f.index.grid, f.index.num_cells() - 1);
  const auto greedy = schedule_greedy(a, all_cells(8), 2);
  CHECK(out.plan.batches == greedy.batches);
  for (size_t t = 0; t < out.plan.batches.size(); ++t) {
    CHECK(out.plan.active[t] == active_queries(a, out.plan.batches[t]));
  }
  p.use_schedule = false;
  const auto plain = run_out_of_core(f.file, f.queries, sp, p);
  CHECK(plain.plan.batches == schedule_identity(a, all_cells(8), 2).batches);
  CHECK(out.plan.total_cost <= plain.plan.total_cost);
}

TEST_CASE("simulated clock is deterministic and overlaps stages", "[pipeline]") {
  const auto& f = fixture();
  OutOfCoreParams p;
  p.batch_cells = 2;
  p.budget.memory_cap = size_t{1} << 30;
  p.simulated = true;
  const auto a = run_out_of_core(f.file, f.queries, SearchParams{}, p);
  const auto b = run_out_of_core(f.file, f.queries, SearchParams{}, p);
  REQUIRE(a.timeline.size() == b.timeline.size());
  for (size_t i = 0; i < a.timeline.size(); ++i) {
    CHECK(a.timeline[i].stage == b.timeline[i].stage);
    CHECK(a.timeline[i].start_ns == b.timeline[i].start_ns);
    CHECK(a.timeline[i].end_ns == b.timeline[i].end_ns);
  }
  CHECK(a.latency_ns == b.latency_ns);
  CHECK(a.total_ns == b.total_ns);
  CHECK(stages_overlap(a.timeline, "load", "compute"));

  p.budget.stage_depth = 1;
  const auto serial = run_out_of_core(f.file, f.queries, SearchParams{}, p);
  CHECK_FALSE(stages_overlap(serial.timeline, "load", "compute"));
  CHECK(serial.total_ns >= a.total_ns);
  for (size_t i = 0; i < f.queries.size(); ++i) {
    CHECK(a.latency_ns[i] <= a.total_ns);
    CHECK(a.results[i].neighbors == serial.results[i].neighbors);
  }
}

TEST_CASE("auto batch size fits the memory cap", "[pipeline]") {
  const auto& f = fixture();
  const auto& asg = f.index.assignment;
  OutOfCoreParams p;
  p.budget.memory_cap = partial_index_bound(f.file, asg, 3);
  p.simulated = true;
  const auto out = run_out_of_core(f.file, f.queries, SearchParams{}, p);
  CHECK(out.batch_cells == 3);
  for (size_t bytes : out.batch_bytes) CHECK(bytes <= p.budget.memory_cap);
  CHECK(out.peak_resident_bytes <= p.budget.stage_depth * p.budget.memory_cap);
}
