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
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "catch_amalgamated.hpp"
#include "gridvec/bench.h"
#include "gridvec/eval.h"
#include "test_util.h"

using namespace gridvec;
using Catch::Approx;

namespace {

// Second scan: double accumulation, stable sort on (distance, id).
std::vector<NodeId> scan_topk(const Dataset& data, const RangeQuery& q) {
  std::vector<std::pair<double, NodeId>> hits;
  for (NodeId i = 0; i < data.size(); ++i) {
    bool ok = true;
    for (const auto& p : q.predicates) {
      const double a = data.attribute(i, p.attribute);
      ok = ok && a >= p.low && a <= p.high;
    }
    if (!ok) continue;
    double d = 0;
    const auto v = data.vector(i);
    for (size_t j = 0; j < v.size(); ++j) d += (double(v[j]) - q.q[j]) * (double(v[j]) - q.q[j]);
    hits.emplace_back(d, i);
  }
  std::sort(hits.begin(), hits.end());
  std::vector<NodeId> ids;
  for (size_t i = 0; i < std::min(q.k, hits.size()); ++i) ids.push_back(hits[i].second);
  return ids;
}

uint64_t scan_argmin(const eval::CostModel& m) {
  uint64_t best = 1;
  for (uint64_t s = 2; s <= m.n / 4; ++s) {
    if (eval::cost_of_cells(m, double(s)) < eval::cost_of_cells(m, double(best))) best = s;
  }
  return best;
}

}  // namespace

TEST_CASE("oracle agrees with an independent scan", "[eval]") {
  const auto data = testing::random_dataset(1000, 8, 2, 41, 100);
  std::mt19937_64 rng(42);
  for (int t = 0; t < 100; ++t) {
    const auto q = testing::random_query(data, rng, 10, 100);
    const auto ids = eval::ids_of(eval::brute_force_rfnns(data, q));
    CHECK(ids == scan_topk(data, q));
    CHECK(eval::recall_at_k(ids, ids, q.k) == 1.0);
  }
}

TEST_CASE("oracle returns every match when k is large", "[eval]") {
  const auto data = testing::random_dataset(200, 4, 1, 43, 100);
  RangeQuery q;
  q.q.assign(4, 0.5f);
  q.k = 1000;
  q.predicates = {{0, 10, 19}};
  const auto r = eval::brute_force_rfnns(data, q);
  CHECK(r.size() == size_t(eval::measure_selectivity(data, q) * 200 + 0.5));
  for (size_t i = 1; i < r.size(); ++i) CHECK_FALSE(r[i] < r[i - 1]);

  const auto v = data.vector(7);
  q.q.assign(v.begin(), v.end());
  q.predicates.clear();
  q.k = 3;
  const auto dup = eval::brute_force_rfnns(data, q);
  CHECK(dup[0].id == 7);
  CHECK(dup[0].distance == 0.0f);
}

TEST_CASE("recall at k", "[eval]") {
  const std::vector<NodeId> oracle = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  CHECK(eval::recall_at_k(oracle, oracle, 10) == 1.0);
  const std::vector<NodeId> disjoint = {10, 11, 12, 13, 14, 15, 16, 17, 18, 19};
  CHECK(eval::recall_at_k(disjoint, oracle, 10) == 0.0);
  const std::vector<NodeId> seven = {0, 1, 2, 3, 4, 5, 6, 20, 21, 22};
  CHECK(eval::recall_at_k(seven, oracle, 10) == Approx(0.7));
  CHECK(eval::recall_at_k(seven, std::vector<NodeId>{}, 10) == 1.0);
  const std::vector<NodeId> short_oracle = {3, 4};
  CHECK(eval::recall_at_k(std::vector<NodeId>{4}, short_oracle, 10) == 0.5);
  CHECK(eval::recall_at_k(std::vector<NodeId>{4, 4}, short_oracle, 10) == 0.5);
}

TEST_CASE("generated query widths control selectivity", "[eval]") {
  eval::DataSpec spec;
  spec.n = 10000;
  spec.dim = 4;
  spec.seed = 44;
  const auto data = eval::generate_dataset(spec);
  const auto vectors = eval::generate_query_vectors(spec, 50, 45);

  eval::QuerySpec qs;
  qs.count = 50;
  qs.law = eval::SelectivityLaw::kFixed;
  qs.fixed_width = 1.0;
  for (const auto& g : eval::generate_queries(qs, data, vectors)) {
    CHECK(g.measured_selectivity == 1.0);
  }

  qs.fixed_width = 0.25;
  qs.filtered_attributes = 1;
  for (const auto& g : eval::generate_queries(qs, data, vectors)) {
    CHECK(g.query.predicates.size() == 1);
    CHECK(g.measured_selectivity >= 0.2);
    CHECK(g.measured_selectivity <= 0.3);
    CHECK(g.measured_selectivity == eval::measure_selectivity(data, g.query));
  }

  spec.num_attributes = 4;
  const auto four = eval::generate_dataset(spec);
  qs.fixed_width = 0.5;
  qs.filtered_attributes = 0;
  double mean = 0;
  const auto queries = eval::generate_queries(qs, four, vectors);
  for (const auto& g : queries) mean += g.measured_selectivity;
  mean /= queries.size();
  CHECK(mean >= 1.0 / 16 * 0.5);
  CHECK(mean <= 1.0 / 16 * 1.5);

  qs.law = eval::SelectivityLaw::kUniform;
  for (const auto& g : eval::generate_queries(qs, four, vectors)) {
    for (double w : g.widths) {
      CHECK(w >= qs.min_width);
      CHECK(w <= qs.max_width);
    }
  }
}

TEST_CASE("query generation is seeded", "[eval]") {
  eval::DataSpec spec;
  spec.n = 500;
  const auto data = eval::generate_dataset(spec);
  CHECK(data.vectors() == eval::generate_dataset(spec).vectors());
  const auto vectors = eval::generate_query_vectors(spec, 10, 1);
  eval::QuerySpec qs;
  qs.count = 10;
  const auto a = eval::generate_queries(qs, data, vectors);
  const auto b = eval::generate_queries(qs, data, vectors);
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].widths == b[i].widths);
}

TEST_CASE("advisor argmin matches an exhaustive scan", "[eval][advisor]") {
  std::mt19937_64 rng(46);
  std::uniform_real_distribution<double> alpha(0.05, 0.95), sigma(0.001, 1.0);
  for (int t = 0; t < 20; ++t) {
    eval::CostModel m;
    m.n = 8 + rng() % 200000;
    m.alpha = alpha(rng);
    m.sigma = sigma(rng);
    const auto advice = eval::advise_cell_count(m);
    CHECK(eval::cost_of_cells(m, double(advice.argmin)) ==
          eval::cost_of_cells(m, double(scan_argmin(m))));
  }
  eval::CostModel defaults;
  CHECK(eval::advise_cell_count(defaults).argmin == 3);
}

TEST_CASE("advisor limiting cases and errors", "[eval][advisor]") {
  eval::CostModel m;
  m.n = 1000;
  m.sigma = 0;
  const auto flat = eval::advise_cell_count(m);
  CHECK(flat.argmin == 250);
  CHECK(std::isinf(flat.closed_form));

  m.alpha = 1.0;
  CHECK_THROWS_AS(eval::advise_cell_count(m), Error);
  m.alpha = 0.5;
  m.sigma = 1.5;
  CHECK_THROWS_AS(eval::advise_cell_count(m), Error);
  m.sigma = 0.1;
  m.n = 3;
  CHECK_THROWS_AS(eval::advise_cell_count(m), Error);
}

TEST_CASE("cost curve has one sign change", "[eval][advisor]") {
  for (double sigma : {1.0 / 64, 1.0 / 16, 1.0 / 4}) {
    eval::CostModel m;
    m.n = 100000;
    m.sigma = sigma;
    const auto advice = eval::advise_cell_count(m, 2000);
    REQUIRE(advice.curve.size() == 2000);
    int changes = 0;
    for (size_t i = 2; i < advice.curve.size(); ++i) {
      const bool down_before = advice.curve[i - 1] < advice.curve[i - 2];
      const bool down_now = advice.curve[i] < advice.curve[i - 1];
      changes += down_before != down_now;
    }
    // a minimiser at S = 1 leaves the curve increasing throughout
    CHECK(changes == (advice.argmin > 1 ? 1 : 0));
    CHECK(advice.curve[0] == Approx(eval::cost_of_cells(m, 1)));
  }
}

TEST_CASE("closed form scales inversely with selectivity", "[eval][advisor]") {
  for (double sigma : {1.0 / 256, 1.0 / 64, 1.0 / 16}) {
    eval::CostModel m;
    m.n = 100000000;
    m.sigma = sigma;
    const double one = eval::advise_cell_count(m).closed_form;
    m.sigma = 2 * sigma;
    const double two = eval::advise_cell_count(m).closed_form;
    CHECK(two == Approx(one / 2).epsilon(0.10));
  }
}

TEST_CASE("nearest-rank percentile", "[eval]") {
  CHECK(eval::percentile({}, 0.5) == 0.0);
  CHECK(eval::percentile({5}, 0.99) == 5.0);
  CHECK(eval::percentile({4, 1, 3, 2}, 0.5) == 2.0);
  std::vector<double> hundred(100);
  for (int i = 0; i < 100; ++i) hundred[i] = i + 1;
  CHECK(eval::percentile(hundred, 0.99) == 99.0);
  CHECK(eval::percentile(hundred, 1.0) == 100.0);
}

TEST_CASE("benchmark rows and csv output", "[eval][bench]") {
  eval::DataSpec spec;
  spec.n = 1500;
  spec.seed = 47;
  spec.num_clusters = 0;  // connected cell graphs, so the widest beam is exhaustive
  GridParams g;
  g.num_cells = 4;
  HistogramParams h;
  h.num_clusters = 8;
  const auto index = build_index(eval::generate_dataset(spec), g, BuildParams{}, h);
  eval::QuerySpec qs;
  qs.count = 60;
  std::vector<RangeQuery> queries;
  for (auto& q : eval::generate_queries(qs, index.data, eval::generate_query_vectors(spec, 60, 3))) {
    queries.push_back(q.query);
  }
  std::vector<std::vector<NodeId>> oracle;
  for (const auto& q : queries) oracle.push_back(eval::ids_of(eval::brute_force_rfnns(index.data, q)));

  const std::vector<size_t> beams = {10, 20, 40, 80, 160, 1500};
  SearchParams sp;
  sp.rerank_depth = 1500;
  const auto rows = eval::bench_in_memory(index, queries, oracle, beams, sp);
  REQUIRE(rows.size() == beams.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].beam == beams[i]);
    CHECK(rows[i].qps > 0);
    CHECK(rows[i].p50_ms <= rows[i].p99_ms);
    if (i > 0) CHECK(rows[i].recall >= rows[i - 1].recall - 0.005);
  }
  CHECK(rows.back().recall == Approx(1.0));

  const auto file = IndexFile::from_bytes(serialize(index));
  OutOfCoreParams p;
  p.simulated = true;
  p.batch_cells = 2;
  p.budget.memory_cap = size_t{1} << 30;
  std::vector<std::vector<TimelineSpan>> timelines;
  const auto sim = eval::bench_out_of_core(file, queries, oracle, beams, sp, p, &timelines);
  CHECK(timelines.size() == beams.size());
  std::ostringstream a, b;
  eval::write_bench_csv(a, sim);
  eval::write_bench_csv(b, eval::bench_out_of_core(file, queries, oracle, beams, sp, p));
  CHECK(a.str() == b.str());
  const std::string csv = a.str();
  CHECK(csv.rfind("beam,recall,qps,p50_ms,p99_ms\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + long(beams.size()));

  std::ostringstream t;
  eval::write_timeline_csv(t, timelines[0]);
  CHECK(t.str().rfind("stage,batch,start_ns,end_ns\n", 0) == 0);
}

TEST_CASE("scheduling lowers simulated latency on a skewed workload", "[eval][bench]") {
  eval::DataSpec spec;
  spec.n = 4000;
  spec.seed = 48;
  spec.attribute_law = eval::AttributeLaw::kSkewed;
  GridParams g;
  g.num_cells = 16;
  HistogramParams h;
  h.num_clusters = 16;
  const auto index = build_index(eval::generate_dataset(spec), g, BuildParams{}, h);
  const auto file = IndexFile::from_bytes(serialize(index));
  eval::QuerySpec qs;
  qs.count = 100;
  qs.law = eval::SelectivityLaw::kFixed;
  qs.fixed_width = 0.25;
  std::vector<RangeQuery> queries;
  for (auto& q : eval::generate_queries(qs, index.data, eval::generate_query_vectors(spec, 100, 4))) {
    queries.push_back(q.query);
  }
  OutOfCoreParams p;
  p.simulated = true;
  p.batch_cells = 4;
  p.budget.memory_cap = size_t{1} << 30;
  const auto on = run_out_of_core(file, queries, SearchParams{}, p);
  p.use_schedule = false;
  const auto off = run_out_of_core(file, queries, SearchParams{}, p);
  auto mean = [](const std::vector<int64_t>& v) {
    double s = 0;
    for (auto x : v) s += double(x);
    return s / v.size();
  };
  CHECK(on.plan.total_cost <= off.plan.total_cost);
  CHECK(mean(on.latency_ns) / mean(off.latency_ns) < 1.0);
}
