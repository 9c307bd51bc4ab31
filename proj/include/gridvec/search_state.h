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

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gridvec/core.h"

namespace gridvec {

// Epoch-stamped membership set over [0, n). reset() is O(1) except on epoch
// wraparound.
class VisitedSet {
 public:
  explicit VisitedSet(size_t n = 0) : stamps_(n, 0) {}

  void resize(size_t n) {
    stamps_.assign(n, 0);
    epoch_ = 1;
  }
  void reset() {
    if (++epoch_ == 0) {
      std::fill(stamps_.begin(), stamps_.end(), 0);
      epoch_ = 1;
    }
  }
  size_t capacity() const { return stamps_.size(); }
  bool contains(NodeId id) const { return stamps_[id] == epoch_; }
  // Returns true when `id` was not yet present.
  bool insert(NodeId id) {
    if (stamps_[id] == epoch_) return false;
    stamps_[id] = epoch_;
    return true;
  }

 private:
  std::vector<uint32_t> stamps_;
  uint32_t epoch_ = 1;
};

// Candidate pool sorted by (distance, id), bounded by `capacity` with
// furthest-eviction.
class CandidatePool {
 public:
  struct Entry {
    float distance;
    NodeId id;
    bool expanded;
  };

  explicit CandidatePool(size_t capacity = 1) : capacity_(std::max<size_t>(capacity, 1)) {}

  size_t capacity() const { return capacity_; }
  size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  bool full() const { return entries_.size() >= capacity_; }
  void clear() {
    entries_.clear();
    cursor_ = 0;
  }
  void set_capacity(size_t capacity) {
    capacity_ = std::max<size_t>(capacity, 1);
    if (entries_.size() > capacity_) entries_.resize(capacity_);
  }

  std::span<const Entry> entries() const { return entries_; }
  const Entry& operator[](size_t i) const { return entries_[i]; }

  // True when a node at `distance` with this id would be kept.
  bool admits(float distance, NodeId id) const {
    if (!full()) return true;
    const Entry& worst = entries_.back();
    return distance < worst.distance || (distance == worst.distance && id < worst.id);
  }

  // Inserts unless the pool is full and the entry is not better than the worst.
  bool insert(float distance, NodeId id) {
    if (!admits(distance, id)) return false;
    auto pos = std::lower_bound(entries_.begin(), entries_.end(), Entry{distance, id, false},
                                [](const Entry& a, const Entry& b) {
                                  return a.distance < b.distance ||
                                         (a.distance == b.distance && a.id < b.id);
                                });
    const size_t index = static_cast<size_t>(pos - entries_.begin());
    entries_.insert(pos, Entry{distance, id, false});
    if (entries_.size() > capacity_) entries_.pop_back();
    cursor_ = std::min(cursor_, index);
    return true;
  }

  // Marks the nearest unexpanded entry expanded and returns it.
  std::optional<Entry> pop_nearest_unexpanded() {
    while (cursor_ < entries_.size() && entries_[cursor_].expanded) ++cursor_;
    if (cursor_ >= entries_.size()) return std::nullopt;
    entries_[cursor_].expanded = true;
    return entries_[cursor_];
  }

 private:
  size_t capacity_;
  size_t cursor_ = 0;
  std::vector<Entry> entries_;
};

// Bounded collection of the best `capacity` neighbors; max-heap on (distance, id).
class BoundedHeap {
 public:
  explicit BoundedHeap(size_t capacity = 1) : capacity_(capacity) {}

  size_t capacity() const { return capacity_; }
  size_t size() const { return heap_.size(); }
  bool empty() const { return heap_.empty(); }
  const Neighbor& worst() const { return heap_.front(); }
  void clear() { heap_.clear(); }
  void set_capacity(size_t capacity) { capacity_ = capacity; }

  // Unconditional push; caller trims with pop_worst().
  void push(Neighbor n) {
    heap_.push_back(n);
    std::push_heap(heap_.begin(), heap_.end());
  }
  Neighbor pop_worst() {
    std::pop_heap(heap_.begin(), heap_.end());
    Neighbor n = heap_.back();
    heap_.pop_back();
    return n;
  }
  // Keeps only the best `capacity` entries.
  void push_bounded(Neighbor n) {
    if (capacity_ == 0) return;
    if (heap_.size() < capacity_) {
      push(n);
    } else if (n < heap_.front()) {
      pop_worst();
      push(n);
    }
  }
  template <typename Pred>
  void erase_if(Pred pred) {
    std::erase_if(heap_, pred);
    std::make_heap(heap_.begin(), heap_.end());
  }
  std::vector<Neighbor> sorted() const {
    std::vector<Neighbor> out = heap_;
    std::sort(out.begin(), out.end());
    return out;
  }
  std::span<const Neighbor> unordered() const { return heap_; }

 private:
  size_t capacity_;
  std::vector<Neighbor> heap_;
};

struct SearchStats {
  uint64_t distance_computations = 0;
  uint64_t expansions = 0;
  uint64_t cells_visited = 0;

  SearchStats& operator+=(const SearchStats& o) {
    distance_computations += o.distance_computations;
    expansions += o.expansions;
    cells_visited += o.cells_visited;
    return *this;
  }
};

// Per-query traversal state: Cand (bounded pool), R (top-k, unfiltered),
// recCand (filter-satisfying nodes evicted from R) and the visited set.
struct SearchState {
  CandidatePool cand;
  BoundedHeap results;
  BoundedHeap recycled;
  VisitedSet* visited = nullptr;
  SearchStats stats;
  size_t k = 1;

  SearchState(size_t beam, size_t k_results, size_t recycle_capacity, VisitedSet* v)
      : cand(beam), results(k_results), recycled(recycle_capacity), visited(v), k(k_results) {}

  // Pushes v into R; on overflow the furthest member moves to recCand when it
  // satisfies the filter.
  template <typename Accept>
  void push_result(Neighbor v, Accept&& accept) {
    results.push(v);
    if (results.size() > k) {
      Neighbor w = results.pop_worst();
      if (accept(w.id)) recycled.push_bounded(w);
    }
  }

  // Adds an entry point: marks it visited and pushes it into Cand and R.
  template <typename Accept>
  bool seed(NodeId id, float distance, Accept&& accept) {
    if (!visited->insert(id)) return false;
    if (cand.insert(distance, id)) push_result({id, distance}, accept);
    return true;
  }
};

// Best-first expansion: pop the nearest unexpanded candidate u, evaluate each
// unvisited neighbor v, and admit v into Cand and R when it beats the pool's
// current worst. Stops when Cand holds no unexpanded entry.
template <typename NeighborFn, typename DistanceFn, typename Accept>
void best_first_expand(SearchState& state, NeighborFn&& neighbors, DistanceFn&& dist,
                       Accept&& accept) {
  while (auto u = state.cand.pop_nearest_unexpanded()) {
    ++state.stats.expansions;
    for (NodeId v : neighbors(u->id)) {
      if (v == kInvalidNode || !state.visited->insert(v)) continue;
      const float dv = dist(v);
      ++state.stats.distance_computations;
      if (!state.cand.insert(dv, v)) continue;
      state.push_result({v, dv}, accept);
    }
  }
}

}  // namespace gridvec
