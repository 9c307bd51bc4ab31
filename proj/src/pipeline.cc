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

#include "gridvec/pipeline.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <exception>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <thread>
#include <tuple>

#include "gridvec/histogram.h"
#include "gridvec/util.h"

namespace gridvec {

namespace {

constexpr uint32_t kNoSlot = 0xffffffffu;

template <typename T>
class BlockingQueue {
 public:
  void push(T value) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      items_.push_back(std::move(value));
    }
    cv_.notify_one();
  }
  T pop() {
    std::unique_lock<std::mutex> lock(mu_);
    cv_.wait(lock, [&] { return !items_.empty(); });
    T value = std::move(items_.front());
    items_.pop_front();
    return value;
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<T> items_;
};

}  // namespace

size_t PartialIndex::byte_size() const {
  return cells.size() * sizeof(CellId) + cell_offset.size() * sizeof(uint32_t) +
         cell_degree.size() * sizeof(uint32_t) + adjacency_offset.size() * sizeof(uint64_t) +
         globals.size() * sizeof(NodeId) + adjacency.size() * sizeof(uint32_t) +
         inter.size() * sizeof(uint32_t);
}

size_t PartialIndex::intra_edge_count() const {
  return static_cast<size_t>(
      std::count_if(adjacency.begin(), adjacency.end(), [](uint32_t v) { return v != kNoSlot; }));
}

size_t PartialIndex::inter_edge_count() const {
  return static_cast<size_t>(
      std::count_if(inter.begin(), inter.end(), [](uint32_t v) { return v != kNoSlot; }));
}

size_t PartialIndex::position_of(CellId cell) const {
  return static_cast<size_t>(std::find(cells.begin(), cells.end(), cell) - cells.begin());
}

size_t partial_index_bound(const IndexFile& file, const CellAssignment& assignment,
                           size_t batch_cells) {
  size_t largest = 0;
  for (const auto& m : assignment.members) largest = std::max(largest, m.size());
  const size_t d = file.header().intra_degree;
  const size_t l = file.header().inter_degree;
  const size_t per_node = sizeof(NodeId) + d * sizeof(uint32_t) + batch_cells * l * sizeof(uint32_t);
  const size_t per_cell = sizeof(CellId) + 2 * sizeof(uint32_t) + sizeof(uint64_t);
  return batch_cells * (largest * per_node + per_cell) + sizeof(uint32_t);
}

PartialIndex assemble_partial_index(const IndexFile& file, const CellAssignment& assignment,
                                    std::span<const CellId> batch, size_t memory_cap,
                                    size_t batch_index) {
  const size_t l = file.header().inter_degree;
  PartialIndex blob;
  blob.batch = batch_index;
  blob.inter_degree = l;
  blob.cells.assign(batch.begin(), batch.end());
  blob.cell_offset.push_back(0);
  for (CellId c : batch) {
    if (c >= assignment.num_cells()) {
      throw Error("batch " + std::to_string(batch_index) + " references unknown cell " +
                  std::to_string(c));
    }
    const auto& members = assignment.members[c];
    blob.globals.insert(blob.globals.end(), members.begin(), members.end());
    blob.cell_offset.push_back(static_cast<uint32_t>(blob.globals.size()));
  }
  // Global cell -> batch position, for remapping edge targets.
  std::vector<uint32_t> slot(assignment.num_cells(), kNoSlot);
  for (size_t s = 0; s < batch.size(); ++s) slot[batch[s]] = static_cast<uint32_t>(s);
  auto local_of = [&](NodeId v) -> uint32_t {
    if (v == kInvalidNode) return kNoSlot;
    const uint32_t s = slot[assignment.cell_of[v]];
    if (s == kNoSlot) return kNoSlot;
    return blob.cell_offset[s] + assignment.rank_in_cell[v];
  };

  for (size_t s = 0; s < batch.size(); ++s) {
    const IntraCellGraph graph = file.read_intra(batch[s]);
    blob.cell_degree.push_back(static_cast<uint32_t>(graph.degree));
    blob.adjacency_offset.push_back(blob.adjacency.size());
    for (NodeId v : graph.adjacency) blob.adjacency.push_back(local_of(v));
  }

  blob.inter.assign(blob.globals.size() * batch.size() * l, kNoSlot);
  for (size_t local = 0; local < blob.globals.size(); ++local) {
    const auto slots = file.inter_slots(blob.globals[local]);
    for (size_t s = 0; s < batch.size(); ++s) {
      for (size_t e = 0; e < l; ++e) {
        blob.inter[(local * batch.size() + s) * l + e] = local_of(slots[batch[s] * l + e]);
      }
    }
  }

  if (blob.byte_size() > memory_cap) {
    throw Error("batch " + std::to_string(batch_index) + " needs " +
                std::to_string(blob.byte_size()) + " bytes but memory_cap is " +
                std::to_string(memory_cap));
  }
  return blob;
}

PartialGraphView::PartialGraphView(const PartialIndex& blob, const CellAssignment& assignment,
                                   const IndexFile& file)
    : blob_(blob),
      assignment_(assignment),
      file_(file),
      slot_of_cell_(assignment.num_cells(), kNoSlot) {
  for (size_t s = 0; s < blob.cells.size(); ++s) {
    slot_of_cell_[blob.cells[s]] = static_cast<uint32_t>(s);
  }
}

uint32_t PartialGraphView::local_of(NodeId node) const {
  const uint32_t s = slot_of_cell_[assignment_.cell_of[node]];
  if (s == kNoSlot) return kNoSlot;
  return blob_.cell_offset[s] + assignment_.rank_in_cell[node];
}

std::span<const NodeId> PartialGraphView::intra_neighbors(NodeId node) const {
  thread_local std::vector<NodeId> buffer;
  buffer.clear();
  const uint32_t local = local_of(node);
  if (local == kNoSlot) return {};
  const uint32_t s = slot_of_cell_[assignment_.cell_of[node]];
  const size_t degree = blob_.cell_degree[s];
  const size_t start = blob_.adjacency_offset[s] + (local - blob_.cell_offset[s]) * degree;
  for (size_t e = 0; e < degree; ++e) {
    const uint32_t v = blob_.adjacency[start + e];
    buffer.push_back(v == kNoSlot ? kInvalidNode : blob_.globals[v]);
  }
  return buffer;
}

std::span<const NodeId> PartialGraphView::inter_neighbors(NodeId node, CellId cell) const {
  thread_local std::vector<NodeId> buffer;
  buffer.clear();
  const size_t l = blob_.inter_degree;
  const uint32_t local = local_of(node);
  const uint32_t target = slot_of_cell_[cell];
  if (target == kNoSlot) return {};
  if (local == kNoSlot) {
    // Carried over from an earlier batch: host-side slots.
    const auto slots = file_.inter_slots(node).subspan(static_cast<size_t>(cell) * l, l);
    for (NodeId v : slots) {
      if (v == kInvalidNode) break;
      buffer.push_back(v);
    }
    return buffer;
  }
  const size_t base = (static_cast<size_t>(local) * blob_.cells.size() + target) * l;
  for (size_t e = 0; e < l; ++e) {
    const uint32_t v = blob_.inter[base + e];
    if (v == kNoSlot) break;
    buffer.push_back(blob_.globals[v]);
  }
  return buffer;
}

std::span<const NodeId> PartialGraphView::cell_members(CellId cell) const {
  const uint32_t s = slot_of_cell_[cell];
  if (s == kNoSlot) return {};
  return std::span<const NodeId>(blob_.globals)
      .subspan(blob_.cell_offset[s], blob_.cell_offset[s + 1] - blob_.cell_offset[s]);
}

CellId PartialGraphView::cell_of(NodeId node) const { return assignment_.cell_of[node]; }

size_t PartialGraphView::num_cells() const { return assignment_.num_cells(); }

bool stages_overlap(std::span<const TimelineSpan> timeline, const std::string& a,
                    const std::string& b) {
  for (const auto& x : timeline) {
    if (x.stage != a) continue;
    for (const auto& y : timeline) {
      if (y.stage != b) continue;
      if (x.start_ns < y.end_ns && y.start_ns < x.end_ns) return true;
    }
  }
  return false;
}

namespace {

struct QueryContext {
  std::vector<QueryTraversal> traversals;
  std::vector<QueryPlan> plans;
  std::vector<size_t> last_batch;  // batch after which candidates are emitted
};

struct Emitted {
  size_t batch = 0;
  std::vector<uint32_t> queries;
  std::vector<std::vector<Neighbor>> candidates;
};

// Runs the active queries of one batch; returns distance computations spent.
uint64_t compute_batch(const PartialGraphView& view, const PartialIndex& blob,
                       std::span<const uint32_t> active, QueryContext& ctx, size_t n) {
  std::vector<CellId> sorted_cells = blob.cells;
  std::sort(sorted_cells.begin(), sorted_cells.end());
  std::vector<uint8_t> in_batch(view.num_cells(), 0);
  for (CellId c : blob.cells) in_batch[c] = 1;

  std::vector<uint64_t> spent(active.size(), 0);
#pragma omp parallel for schedule(dynamic, 1)
  for (int64_t a = 0; a < static_cast<int64_t>(active.size()); ++a) {
    thread_local VisitedSet visited;
    if (visited.capacity() != n) visited.resize(n);
    const uint32_t qi = active[a];
    QueryTraversal& traversal = ctx.traversals[qi];
    const uint64_t before = traversal.state().stats.distance_computations;
    traversal.attach_visited(&visited);
    if (ctx.plans[qi].fallback) {
      traversal.global_search(view, sorted_cells);
    } else {
      std::vector<CellId> seq;
      for (CellId c : ctx.plans[qi].cells) {
        if (in_batch[c]) seq.push_back(c);
      }
      traversal.run_cells(view, seq);
    }
    spent[a] = traversal.state().stats.distance_computations - before;
  }
  uint64_t total = 0;
  for (uint64_t s : spent) total += s;
  return total;
}

Emitted collect(size_t t, const BatchPlan& plan, const QueryContext& ctx) {
  Emitted out;
  out.batch = t;
  for (uint32_t qi : plan.active[t]) {
    if (ctx.last_batch[qi] != t) continue;
    out.queries.push_back(qi);
    out.candidates.push_back(ctx.traversals[qi].candidates());
  }
  return out;
}

}  // namespace

OutOfCoreResult run_out_of_core(const IndexFile& file, std::span<const RangeQuery> queries,
                                const SearchParams& params, const OutOfCoreParams& options) {
  const auto& header = file.header();
  for (const auto& q : queries) q.validate(header.dim, header.num_attributes);
  if (options.budget.stage_depth == 0) throw Error("stage_depth must be >= 1");

  const GridSpec grid = file.read_grid();
  const CellAssignment assignment = file.read_assignment();
  const ClusterHistogram histogram = file.read_histogram();
  const ScalarQuantizer codes = file.read_quantizer();
  const std::vector<double> attributes = file.read_attributes();
  const Metric metric = file.build_params().metric;
  const size_t n = header.n;

  ComputeTier tier;
  tier.codes = &codes;
  tier.attributes = attributes;
  tier.num_attributes = header.num_attributes;
  tier.metric = metric;

  OutOfCoreResult out;
  out.results.resize(queries.size());
  out.latency_ns.assign(queries.size(), 0);

  QueryContext ctx;
  ctx.traversals.reserve(queries.size());
  size_t s_thre = 0;
  for (const auto& q : queries) {
    const auto resolved = resolve(params, q, header.num_cells, header.intra_degree);
    s_thre = resolved.s_thre;
    ctx.plans.push_back(plan_query(grid, histogram, q, resolved, metric));
    ctx.traversals.emplace_back(q, resolved, tier, nullptr);
  }
  if (queries.empty()) s_thre = std::max<size_t>(1, header.num_cells - 1);
  for (size_t i = 0; i < queries.size(); ++i) {
    out.results[i].used_fallback = ctx.plans[i].fallback;
    out.results[i].cell_order = ctx.plans[i].cells;
  }

  // Scheduling.
  const IncidenceMatrix incidence = build_incidence(queries, grid, s_thre);
  const std::vector<CellId> cells = incidence.referenced_cells();
  if (!cells.empty() && partial_index_bound(file, assignment, 1) > options.budget.memory_cap) {
    throw Error("memory_cap of " + std::to_string(options.budget.memory_cap) +
                " bytes cannot hold the largest cell (" +
                std::to_string(partial_index_bound(file, assignment, 1)) + " bytes)");
  }
  size_t b = options.batch_cells;
  if (b == 0) {
    b = 1;
    while (b < cells.size() &&
           partial_index_bound(file, assignment, b + 1) <= options.budget.memory_cap) {
      ++b;
    }
  }
  out.batch_cells = b;
  out.plan = options.use_schedule ? schedule_greedy(incidence, cells, b)
                                  : schedule_identity(incidence, cells, b);
  const BatchPlan& plan = out.plan;
  const size_t num_batches = plan.batches.size();
  ctx.last_batch.assign(queries.size(), num_batches);
  for (size_t t = 0; t < num_batches; ++t) {
    for (uint32_t qi : plan.active[t]) ctx.last_batch[qi] = t;
  }
  out.batch_bytes.assign(num_batches, 0);

  auto finish_query = [&](uint32_t qi, const std::vector<Neighbor>& candidates) {
    out.results[qi].neighbors = rerank(candidates, queries[qi].q, queries[qi].k, metric,
                                       [&](NodeId v) { return file.vector(v); });
    out.results[qi].stats = ctx.traversals[qi].state().stats;
  };

  if (options.simulated) {
    const double bandwidth = options.budget.bandwidth > 0.0 ? options.budget.bandwidth : 1e9;
    const size_t depth = options.budget.stage_depth;
    std::vector<double> load_end(num_batches), compute_end(num_batches);
    double prev_rerank_end = 0.0;
    for (size_t t = 0; t < num_batches; ++t) {
      PartialIndex blob = assemble_partial_index(file, assignment, plan.batches[t],
                                                 options.budget.memory_cap, t);
      out.batch_bytes[t] = blob.byte_size();
      const PartialGraphView view(blob, assignment, file);
      const uint64_t spent = compute_batch(view, blob, plan.active[t], ctx, n);
      const Emitted emitted = collect(t, plan, ctx);
      size_t reranked = 0;
      for (size_t e = 0; e < emitted.queries.size(); ++e) {
        finish_query(emitted.queries[e], emitted.candidates[e]);
        reranked += emitted.candidates[e].size();
      }

      double load_start = t > 0 ? load_end[t - 1] : 0.0;
      if (t >= depth) load_start = std::max(load_start, compute_end[t - depth]);
      load_end[t] = load_start + static_cast<double>(blob.byte_size()) * 1e9 / bandwidth;
      const double compute_start = std::max(load_end[t], t > 0 ? compute_end[t - 1] : 0.0);
      compute_end[t] = compute_start +
                       static_cast<double>(spent) * options.clock.ns_per_distance +
                       static_cast<double>(plan.active[t].size()) * options.clock.ns_per_active_query;
      const double rerank_start = std::max(compute_end[t], prev_rerank_end);
      prev_rerank_end = rerank_start + static_cast<double>(reranked) * options.clock.ns_per_rerank;

      out.timeline.push_back({"load", t, std::llround(load_start), std::llround(load_end[t])});
      out.timeline.push_back(
          {"compute", t, std::llround(compute_start), std::llround(compute_end[t])});
      out.timeline.push_back(
          {"rerank", t, std::llround(rerank_start), std::llround(prev_rerank_end)});
      for (uint32_t qi : emitted.queries) out.latency_ns[qi] = std::llround(prev_rerank_end);
      size_t resident = 0;
      for (size_t u = t >= depth - 1 ? t - (depth - 1) : 0; u <= t; ++u) {
        resident += out.batch_bytes[u];
      }
      out.peak_resident_bytes = std::max(out.peak_resident_bytes, resident);
    }
    out.total_ns = std::llround(prev_rerank_end);
    return out;
  }

  // Real mode: loader thread -> compute (this thread) -> rerank thread.
  const int64_t origin = now_ns();
  std::mutex timeline_mu;
  auto record = [&](const char* stage, size_t t, int64_t start, int64_t end) {
    std::lock_guard<std::mutex> lock(timeline_mu);
    out.timeline.push_back({stage, t, start - origin, end - origin});
  };

  std::counting_semaphore<> slots(static_cast<std::ptrdiff_t>(options.budget.stage_depth));
  BlockingQueue<std::optional<PartialIndex>> staged;
  BlockingQueue<std::optional<Emitted>> emitted_queue;
  std::atomic<bool> abort{false};
  std::atomic<size_t> resident{0};
  std::atomic<size_t> peak{0};
  std::exception_ptr loader_error;

  std::thread loader([&] {
    try {
      for (size_t t = 0; t < num_batches; ++t) {
        slots.acquire();
        if (abort.load()) break;
        const int64_t start = now_ns();
        PartialIndex blob = assemble_partial_index(file, assignment, plan.batches[t],
                                                   options.budget.memory_cap, t);
        if (options.budget.bandwidth > 0.0) {
          const auto transfer = static_cast<int64_t>(static_cast<double>(blob.byte_size()) *
                                                     1e9 / options.budget.bandwidth);
          const int64_t remaining = start + transfer - now_ns();
          if (remaining > 0) std::this_thread::sleep_for(std::chrono::nanoseconds(remaining));
        }
        record("load", t, start, now_ns());
        const size_t now_resident = resident.fetch_add(blob.byte_size()) + blob.byte_size();
        size_t seen = peak.load();
        while (now_resident > seen && !peak.compare_exchange_weak(seen, now_resident)) {
        }
        staged.push(std::move(blob));
      }
    } catch (...) {
      loader_error = std::current_exception();
    }
    staged.push(std::nullopt);
  });

  std::thread reranker([&] {
    while (auto item = emitted_queue.pop()) {
      const int64_t start = now_ns();
      for (size_t e = 0; e < item->queries.size(); ++e) {
        finish_query(item->queries[e], item->candidates[e]);
      }
      const int64_t end = now_ns();
      record("rerank", item->batch, start, end);
      for (uint32_t qi : item->queries) out.latency_ns[qi] = end - origin;
    }
  });

  std::exception_ptr compute_error;
  try {
    while (auto blob = staged.pop()) {
      const size_t t = blob->batch;
      out.batch_bytes[t] = blob->byte_size();
      const int64_t start = now_ns();
      {
        const PartialGraphView view(*blob, assignment, file);
        compute_batch(view, *blob, plan.active[t], ctx, n);
      }
      Emitted emitted = collect(t, plan, ctx);
      record("compute", t, start, now_ns());
      resident.fetch_sub(blob->byte_size());
      blob.reset();
      slots.release();
      emitted_queue.push(std::move(emitted));
    }
  } catch (...) {
    compute_error = std::current_exception();
    abort.store(true);
    slots.release(static_cast<std::ptrdiff_t>(num_batches + 1));
    while (staged.pop()) {
    }
  }
  emitted_queue.push(std::nullopt);
  loader.join();
  reranker.join();
  if (compute_error) std::rethrow_exception(compute_error);
  if (loader_error) std::rethrow_exception(loader_error);

  out.total_ns = now_ns() - origin;
  out.peak_resident_bytes = peak.load();
  std::sort(out.timeline.begin(), out.timeline.end(), [](const auto& a, const auto& b) {
    return std::tie(a.start_ns, a.stage, a.batch) < std::tie(b.start_ns, b.stage, b.batch);
  });
  return out;
}

}  // namespace gridvec
