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

#include <iosfwd>
#include <span>
#include <vector>

#include "gridvec/index.h"
#include "gridvec/index_io.h"
#include "gridvec/pipeline.h"
#include "gridvec/search.h"

namespace gridvec::eval {

struct BenchRow {
  size_t beam = 0;
  double recall = 0.0;
  double qps = 0.0;
  double p50_ms = 0.0;
  double p99_ms = 0.0;
};

// Nearest-rank percentile, q in [0, 1]. Empty input gives 0.
double percentile(std::vector<double> values, double q);

// One row per beam: whole-batch wall clock for QPS, per-query latencies.
std::vector<BenchRow> bench_in_memory(const GmgIndex& index, std::span<const RangeQuery> queries,
                                      std::span<const std::vector<NodeId>> oracle,
                                      std::span<const size_t> beams, SearchParams params);

// Out-of-core variant. In simulated mode QPS and latencies come from the
// simulated clock, so the rows are deterministic. `timelines`, when given,
// receives each beam's timeline.
std::vector<BenchRow> bench_out_of_core(const IndexFile& file, std::span<const RangeQuery> queries,
                                        std::span<const std::vector<NodeId>> oracle,
                                        std::span<const size_t> beams, SearchParams params,
                                        const OutOfCoreParams& options,
                                        std::vector<std::vector<TimelineSpan>>* timelines = nullptr);

void write_bench_csv(std::ostream& out, std::span<const BenchRow> rows);
void write_timeline_csv(std::ostream& out, std::span<const TimelineSpan> timeline);

}  // namespace gridvec::eval
