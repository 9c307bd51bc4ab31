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

#include "gridvec/bench.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "gridvec/eval.h"
#include "gridvec/util.h"

namespace gridvec::eval {

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<size_t>(std::ceil(q * static_cast<double>(values.size())));
  return values[std::clamp<size_t>(rank, 1, values.size()) - 1];
}

namespace {

double mean_recall(std::span<const SearchResult> results, std::span<const RangeQuery> queries,
                   std::span<const std::vector<NodeId>> oracle) {
  if (results.empty()) return 1.0;
  double sum = 0.0;
  for (size_t i = 0; i < results.size(); ++i) {
    sum += recall_at_k(ids_of(results[i].neighbors), oracle[i], queries[i].k);
  }
  return sum / static_cast<double>(results.size());
}

void check_oracle(std::span<const RangeQuery> queries, std::span<const std::vector<NodeId>> oracle) {
  if (oracle.size() != queries.size()) {
    throw Error("bench: " + std::to_string(oracle.size()) + " ground-truth rows for " +
                std::to_string(queries.size()) + " queries");
  }
}

}  // namespace

std::vector<BenchRow> bench_in_memory(const GmgIndex& index, std::span<const RangeQuery> queries,
                                      std::span<const std::vector<NodeId>> oracle,
                                      std::span<const size_t> beams, SearchParams params) {
  check_oracle(queries, oracle);
  for (const auto& q : queries) q.validate(index.data.dim(), index.data.num_attributes());
  std::vector<BenchRow> rows;
  for (size_t beam : beams) {
    params.beam = beam;
    std::vector<SearchResult> results(queries.size());
    std::vector<double> latency(queries.size());
    const int64_t start = now_ns();
#pragma omp parallel for schedule(dynamic, 4)
    for (int64_t i = 0; i < static_cast<int64_t>(queries.size()); ++i) {
      const int64_t t0 = now_ns();
      results[i] = search(index, queries[i], params);
      latency[i] = static_cast<double>(now_ns() - t0) / 1e6;
    }
    const double seconds = static_cast<double>(now_ns() - start) / 1e9;
    BenchRow row;
    row.beam = beam;
    row.recall = mean_recall(results, queries, oracle);
    row.qps = seconds > 0.0 ? static_cast<double>(queries.size()) / seconds : 0.0;
    row.p50_ms = percentile(latency, 0.5);
    row.p99_ms = percentile(latency, 0.99);
    rows.push_back(row);
  }
  return rows;
}

std::vector<BenchRow> bench_out_of_core(const IndexFile& file, std::span<const RangeQuery> queries,
                                        std::span<const std::vector<NodeId>> oracle,
                                        std::span<const size_t> beams, SearchParams params,
                                        const OutOfCoreParams& options,
                                        std::vector<std::vector<TimelineSpan>>* timelines) {
  check_oracle(queries, oracle);
  std::vector<BenchRow> rows;
  for (size_t beam : beams) {
    params.beam = beam;
    const int64_t start = now_ns();
    OutOfCoreResult run = run_out_of_core(file, queries, params, options);
    const int64_t elapsed = options.simulated ? run.total_ns : now_ns() - start;
    std::vector<double> latency;
    latency.reserve(run.latency_ns.size());
    for (int64_t ns : run.latency_ns) latency.push_back(static_cast<double>(ns) / 1e6);
    BenchRow row;
    row.beam = beam;
    row.recall = mean_recall(run.results, queries, oracle);
    row.qps = elapsed > 0 ? static_cast<double>(queries.size()) * 1e9 / static_cast<double>(elapsed)
                          : 0.0;
    row.p50_ms = percentile(latency, 0.5);
    row.p99_ms = percentile(latency, 0.99);
    rows.push_back(row);
    if (timelines != nullptr) timelines->push_back(std::move(run.timeline));
  }
  return rows;
}

void write_bench_csv(std::ostream& out, std::span<const BenchRow> rows) {
  out << "beam,recall,qps,p50_ms,p99_ms\n";
  char line[160];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%zu,%.6f,%.3f,%.6f,%.6f\n", r.beam, r.recall, r.qps,
                  r.p50_ms, r.p99_ms);
    out << line;
  }
}

void write_timeline_csv(std::ostream& out, std::span<const TimelineSpan> timeline) {
  out << "stage,batch,start_ns,end_ns\n";
  for (const auto& s : timeline) {
    out << s.stage << ',' << s.batch << ',' << s.start_ns << ',' << s.end_ns << '\n';
  }
}

}  // namespace gridvec::eval
