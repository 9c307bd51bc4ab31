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
#include "gridvec/search.h"
#include "test_util.h"

using namespace gridvec;

namespace {

const GmgIndex& shared_index() {
  static const GmgIndex index = [] {
    eval::DataSpec spec;
    spec.n = 3000;
    spec.dim = 16;
    spec.seed = 5;
    GridParams g;
    g.num_cells = 16;
    HistogramParams h;
    h.num_clusters = 32;
    return build_index(eval::generate_dataset(spec), g, BuildParams{}, h);
  }();
  return index;
}

std::vector<RangeQuery> mixed_queries(size_t count, uint64_t seed) {
  eval::DataSpec spec;
  spec.n = 3000;
  spec.seed = 5;
  const auto vectors = eval::generate_query_vectors(spec, count, seed);
  eval::QuerySpec qs;
  qs.count = count;
  qs.seed = seed;
  std::vector<RangeQuery> out;
  for (auto& g : eval::generate_queries(qs, shared_index().data, vectors)) out.push_back(g.query);
  return out;
}

// Path 0 - 1 - 2 on a line; one cell.
class PathView final : public GraphView {
 public:
  std::span<const NodeId> intra_neighbors(NodeId node) const override { return adj_[node]; }
  std::span<const NodeId> inter_neighbors(NodeId, CellId) const override { return {}; }
  std::span<const NodeId> cell_members(CellId) const override { return members_; }
  CellId cell_of(NodeId) const override { return 0; }
  size_t num_cells() const override { return 1; }

 private:
  std::vector<std::vector<NodeId>> adj_ = {{1}, {0, 2}, {1}};
  std::vector<NodeId> members_ = {0, 1, 2};
};

}  // namespace

TEST_CASE("greedy walk along a path reaches the query", "[search]") {
  Dataset data(1, 1);
  for (float x : {0.0f, 1.0f, 2.0f}) {
    const double a = 0;
    data.add(std::span<const float>(&x, 1), std::span<const double>(&a, 1));
  }
  const auto sq = ScalarQuantizer::train_and_encode(data);
  ComputeTier tier;
  tier.codes = &sq;
  tier.attributes = data.attribute_table();
  tier.num_attributes = 1;
  RangeQuery q;
  q.q = {2.0f};
  q.k = 1;
  SearchParams p;
  p.beam = 3;
  const auto resolved = resolve(p, q, 1, 2);
  VisitedSet visited(3);
  QueryTraversal t(q, resolved, tier, &visited);
  auto accept = [](NodeId) { return true; };
  t.state().seed(0, tier.distance(q.q, 0), accept);
  t.traverse_cell(PathView{}, 0);
  const auto c = t.candidates();
  REQUIRE(c.size() == 1);
  CHECK(c[0].id == 2);
}

TEST_CASE("filter that matches nothing gives an empty result", "[search]") {
  RangeQuery q;
  q.q.assign(16, 0.5f);
  q.predicates = {{0, -10, -5}};
  const auto r = search(shared_index(), q, SearchParams{});
  CHECK(r.neighbors.empty());
}

TEST_CASE("an exact duplicate is returned first at distance 0", "[search]") {
  const auto& index = shared_index();
  const NodeId target = 1234;
  RangeQuery q;
  const auto v = index.data.vector(target);
  q.q.assign(v.begin(), v.end());
  const double a0 = index.data.attribute(target, 0);
  q.predicates = {{0, a0, a0}};
  const auto r = search(index, q, SearchParams{});
  REQUIRE_FALSE(r.neighbors.empty());
  CHECK(r.neighbors[0].distance == 0.0f);
  CHECK(satisfies(index.data.attributes(r.neighbors[0].id), q.predicates));
}

TEST_CASE("results are filtered, unique and sorted", "[search][property]") {
  const auto& index = shared_index();
  const auto queries = mixed_queries(300, 71);
  for (size_t beam : {10, 64}) {
    SearchParams p;
    p.beam = beam;
    for (const auto& q : queries) {
      const auto r = search(index, q, p);
      CHECK(r.neighbors.size() <= q.k);
      std::set<NodeId> seen;
      for (size_t i = 0; i < r.neighbors.size(); ++i) {
        CHECK(satisfies(index.data.attributes(r.neighbors[i].id), q.predicates));
        CHECK(seen.insert(r.neighbors[i].id).second);
        if (i > 0) CHECK_FALSE(r.neighbors[i] < r.neighbors[i - 1]);
        CHECK(r.neighbors[i].distance ==
              distance(q.q, index.data.vector(r.neighbors[i].id)));
      }
    }
  }
}

TEST_CASE("recall at beam 128 on mixed selectivity", "[search]") {
  const auto& index = shared_index();
  const auto queries = mixed_queries(200, 72);
  SearchParams p;
  p.beam = 128;
  double sum = 0;
  for (const auto& q : queries) {
    const auto r = search(index, q, p);
    sum += eval::recall_at_k(eval::ids_of(r.neighbors),
                             eval::ids_of(eval::brute_force_rfnns(index.data, q)), q.k);
  }
  CHECK(sum / queries.size() >= 0.9);
}

TEST_CASE("complete-graph cells with a full budget are exact", "[search]") {
  const auto data = testing::random_dataset(120, 6, 2, 8, 20);
  GridParams g;
  g.num_cells = 4;
  BuildParams b;
  b.intra_degree = 64;  // every cell is a complete graph
  HistogramParams h;
  h.num_clusters = 4;
  const auto index = build_index(data, g, b, h);
  std::mt19937_64 rng(3);
  SearchParams p;
  p.beam = 120;
  p.rerank_depth = 120;
  p.s_thre = 5;  // no fallback
  for (int t = 0; t < 50; ++t) {
    const auto q = testing::random_query(index.data, rng, 5, 20);
    const auto r = search(index, q, p);
    CHECK_FALSE(r.used_fallback);
    CHECK(r.neighbors == eval::brute_force_rfnns(index.data, q));
  }
}

TEST_CASE("fallback triggers above the threshold", "[search]") {
  const auto& index = shared_index();
  RangeQuery q;
  q.q.assign(16, 0.5f);  // unfiltered: every cell intersects
  SearchParams p;
  auto r = search(index, q, p);
  CHECK(r.used_fallback);
  CHECK(r.neighbors.size() == q.k);
  p.s_thre = index.num_cells();
  r = search(index, q, p);
  CHECK_FALSE(r.used_fallback);
  CHECK(r.neighbors.size() == q.k);
}

TEST_CASE("cell order follows the cardinality estimate", "[search]") {
  const auto& index = shared_index();
  const auto queries = mixed_queries(50, 73);
  for (const auto& q : queries) {
    const auto r = search(index, q, SearchParams{});
    if (r.used_fallback) continue;
    const auto est = estimate_cardinalities(index.histogram, q.q, r.cell_order);
    for (size_t i = 1; i < est.size(); ++i) {
      CHECK(est[i - 1] >= est[i]);
      if (est[i - 1] == est[i]) CHECK(r.cell_order[i - 1] < r.cell_order[i]);
    }
    SearchParams no_order;
    no_order.use_ordering = false;
    const auto plain = search(index, q, no_order);
    CHECK(std::is_sorted(plain.cell_order.begin(), plain.cell_order.end()));
  }
}

TEST_CASE("recycle pool only holds records that pass the filter", "[search][property]") {
  const auto& index = shared_index();
  const IndexGraphView view(index);
  const auto tier = compute_tier_of(index);
  VisitedSet visited(index.size());
  for (const auto& q : mixed_queries(100, 74)) {
    SearchParams p;
    p.beam = 32;
    p.rerank_depth = 50;
    const auto resolved = resolve(p, q, index.num_cells(), index.params.intra_degree);
    const auto plan = plan_query(index.grid, index.histogram, q, resolved, index.params.metric);
    if (plan.fallback) continue;
    QueryTraversal t(q, resolved, tier, &visited);
    t.run_cells(view, plan.cells);
    CHECK(t.state().results.size() <= q.k);
    for (const auto& w : t.state().recycled.unordered()) {
      CHECK(satisfies(index.data.attributes(w.id), q.predicates));
    }
  }
}

TEST_CASE("batch search matches sequential search", "[search]") {
  const auto& index = shared_index();
  auto queries = mixed_queries(60, 75);
  queries.push_back(queries.front());
  const auto batch = search_batch(index, queries, SearchParams{});
  for (size_t i = 0; i < queries.size(); ++i) {
    CHECK(batch[i].neighbors == search(index, queries[i], SearchParams{}).neighbors);
  }
  CHECK(batch.back().neighbors == batch.front().neighbors);
  const std::vector<RangeQuery> one = {queries[3]};
  CHECK(search_batch(index, one, SearchParams{})[0].neighbors == batch[3].neighbors);
}

TEST_CASE("malformed queries are rejected before searching", "[search]") {
  RangeQuery q;
  q.q.assign(3, 0.0f);
  CHECK_THROWS_AS(search(shared_index(), q, SearchParams{}), Error);
  std::vector<RangeQuery> batch(2);
  batch[0].q.assign(16, 0.0f);
  batch[1].q.assign(16, 0.0f);
  batch[1].k = 0;
  CHECK_THROWS_AS(search_batch(shared_index(), batch, SearchParams{}), Error);
}

TEST_CASE("inner-product indexes search consistently", "[search]") {
  const auto data = testing::random_dataset(600, 8, 1, 14, 10);
  BuildParams b;
  b.metric = Metric::kInnerProductNegated;
  HistogramParams h;
  h.num_clusters = 8;
  const auto index = build_index(data, GridParams{}, b, h);
  std::mt19937_64 rng(1);
  SearchParams p;
  p.beam = 200;
  double sum = 0;
  for (int t = 0; t < 30; ++t) {
    const auto q = testing::random_query(index.data, rng, 5, 10);
    const auto r = search(index, q, p);
    const auto truth = eval::brute_force_rfnns(index.data, q, Metric::kInnerProductNegated);
    sum += eval::recall_at_k(eval::ids_of(r.neighbors), eval::ids_of(truth), 5);
  }
  CHECK(sum / 30 >= 0.8);
}
