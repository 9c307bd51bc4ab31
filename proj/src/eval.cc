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

#include "gridvec/eval.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <unordered_set>

#include "gridvec/util.h"

namespace gridvec::eval {

std::vector<Neighbor> brute_force_rfnns(const Dataset& dataset, const RangeQuery& query,
                                        Metric metric) {
  std::vector<Neighbor> matches;
  for (NodeId i = 0; i < dataset.size(); ++i) {
    if (!satisfies(dataset.attributes(i), query.predicates)) continue;
    matches.push_back({i, distance(query.q, dataset.vector(i), metric)});
  }
  std::sort(matches.begin(), matches.end());
  if (matches.size() > query.k) matches.resize(query.k);
  return matches;
}

double recall_at_k(std::span<const NodeId> result, std::span<const NodeId> oracle, size_t k) {
  const size_t denom = std::min(k, oracle.size());
  if (denom == 0) return 1.0;
  std::unordered_set<NodeId> truth(oracle.begin(), oracle.begin() + denom);
  size_t hits = 0;
  std::unordered_set<NodeId> counted;
  for (NodeId id : result.first(std::min(result.size(), k))) {
    if (truth.count(id) != 0 && counted.insert(id).second) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(denom);
}

std::vector<NodeId> ids_of(std::span<const Neighbor> neighbors) {
  std::vector<NodeId> ids;
  ids.reserve(neighbors.size());
  for (const auto& n : neighbors) ids.push_back(n.id);
  return ids;
}

namespace {

std::vector<float> mixture_centers(const DataSpec& spec) {
  std::mt19937_64 rng(mix_seed(spec.seed, 0xce));
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  std::vector<float> centers(spec.num_clusters * spec.dim);
  for (auto& c : centers) c = unit(rng);
  return centers;
}

void draw_mixture_point(const DataSpec& spec, const std::vector<float>& centers,
                        std::mt19937_64& rng, std::span<float> out) {
  if (spec.num_clusters == 0) {
    std::uniform_real_distribution<float> unit(0.0f, 1.0f);
    for (auto& v : out) v = unit(rng);
    return;
  }
  std::uniform_int_distribution<size_t> pick(0, spec.num_clusters - 1);
  std::normal_distribution<float> noise(0.0f, spec.cluster_std);
  const size_t c = pick(rng);
  for (size_t j = 0; j < spec.dim; ++j) out[j] = centers[c * spec.dim + j] + noise(rng);
}

}  // namespace

Dataset generate_dataset(const DataSpec& spec) {
  if (spec.n == 0 || spec.dim == 0) throw Error("generate_dataset: n and dim must be positive");
  const auto centers = mixture_centers(spec);
  std::mt19937_64 rng(mix_seed(spec.seed, 0xda7a));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<float> vectors(spec.n * spec.dim);
  std::vector<double> attributes(spec.n * spec.num_attributes);
  for (size_t i = 0; i < spec.n; ++i) {
    draw_mixture_point(spec, centers, rng, {vectors.data() + i * spec.dim, spec.dim});
    for (size_t a = 0; a < spec.num_attributes; ++a) {
      double u = unit(rng);
      if (spec.attribute_law == AttributeLaw::kSkewed) u = u * u * u;
      attributes[i * spec.num_attributes + a] = std::floor(u * spec.attribute_range);
    }
  }
  return Dataset(spec.dim, spec.num_attributes, std::move(vectors), std::move(attributes));
}

std::vector<std::vector<float>> generate_query_vectors(const DataSpec& spec, size_t count,
                                                       uint64_t seed) {
  const auto centers = mixture_centers(spec);
  std::mt19937_64 rng(mix_seed(seed, 0x9e7));
  std::vector<std::vector<float>> out(count, std::vector<float>(spec.dim));
  for (auto& v : out) draw_mixture_point(spec, centers, rng, v);
  return out;
}

double measure_selectivity(const Dataset& dataset, const RangeQuery& query) {
  if (dataset.empty()) return 0.0;
  size_t hits = 0;
  for (NodeId i = 0; i < dataset.size(); ++i) {
    hits += satisfies(dataset.attributes(i), query.predicates) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(dataset.size());
}

std::vector<GeneratedQuery> generate_queries(const QuerySpec& spec, const Dataset& dataset,
                                             std::span<const std::vector<float>> vectors) {
  const size_t m = dataset.num_attributes();
  const size_t filtered = spec.filtered_attributes == 0 ? m : std::min(spec.filtered_attributes, m);
  if (spec.law == SelectivityLaw::kUniform &&
      !(spec.min_width > 0.0 && spec.min_width <= spec.max_width && spec.max_width <= 1.0)) {
    throw Error("generate_queries: widths must satisfy 0 < min <= max <= 1");
  }
  if (spec.law == SelectivityLaw::kFixed && !(spec.fixed_width > 0.0 && spec.fixed_width <= 1.0)) {
    throw Error("generate_queries: fixed width must be in (0, 1]");
  }
  std::vector<double> lo(m, std::numeric_limits<double>::infinity());
  std::vector<double> hi(m, -std::numeric_limits<double>::infinity());
  for (NodeId i = 0; i < dataset.size(); ++i) {
    for (size_t a = 0; a < m; ++a) {
      lo[a] = std::min(lo[a], dataset.attribute(i, a));
      hi[a] = std::max(hi[a], dataset.attribute(i, a));
    }
  }

  std::mt19937_64 rng(mix_seed(spec.seed, 0x0e41));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<GeneratedQuery> out;
  out.reserve(spec.count);
  for (size_t i = 0; i < spec.count; ++i) {
    GeneratedQuery g;
    g.query.q = vectors[i % vectors.size()];
    g.query.k = spec.k;
    for (size_t a = 0; a < filtered; ++a) {
      const double width = spec.law == SelectivityLaw::kFixed
                               ? spec.fixed_width
                               : spec.min_width + unit(rng) * (spec.max_width - spec.min_width);
      const double span = hi[a] - lo[a];
      const double start = lo[a] + unit(rng) * (1.0 - width) * span;
      g.query.predicates.push_back({a, start, start + width * span});
      g.widths.push_back(width);
    }
    g.measured_selectivity = measure_selectivity(dataset, g.query);
    out.push_back(std::move(g));
  }
  return out;
}

double cost_of_cells(const CostModel& model, double cells) {
  return (1.0 + model.sigma * cells * model.alpha) *
         std::log(static_cast<double>(model.n) / cells);
}

double cost_derivative(const CostModel& model, double cells) {
  return model.sigma * model.alpha * (std::log(static_cast<double>(model.n) / cells) - 1.0) -
         1.0 / cells;
}

CellAdvice advise_cell_count(const CostModel& model, size_t curve_points) {
  if (!(model.alpha > 0.0 && model.alpha < 1.0)) throw Error("advisor: alpha must be in (0, 1)");
  if (!(model.sigma >= 0.0 && model.sigma <= 1.0)) throw Error("advisor: sigma must be in [0, 1]");
  if (model.n < 4) throw Error("advisor: n must be >= 4");
  const uint64_t upper = model.n / 4;

  std::vector<uint64_t> candidates = {1, upper};
  // dT/dS increases while S < 1/(sigma*alpha); the first upward zero crossing
  // in that stretch is the interior minimum.
  if (model.sigma > 0.0 && cost_derivative(model, 1.0) < 0.0) {
    const double right = std::min(static_cast<double>(upper), 1.0 / (model.sigma * model.alpha));
    if (right > 1.0 && cost_derivative(model, right) > 0.0) {
      double a = 1.0;
      double b = right;
      for (int iter = 0; iter < 200 && b - a > 1e-9 * b; ++iter) {
        const double mid = 0.5 * (a + b);
        (cost_derivative(model, mid) < 0.0 ? a : b) = mid;
      }
      const auto floor_s = static_cast<uint64_t>(std::floor(a));
      candidates.push_back(std::clamp<uint64_t>(floor_s, 1, upper));
      candidates.push_back(std::clamp<uint64_t>(floor_s + 1, 1, upper));
    }
  }
  CellAdvice advice;
  double best = std::numeric_limits<double>::infinity();
  std::sort(candidates.begin(), candidates.end());
  for (uint64_t s : candidates) {
    const double t = cost_of_cells(model, static_cast<double>(s));
    if (t < best) {
      best = t;
      advice.argmin = s;
    }
  }
  advice.theta =
      1.0 / (model.alpha *
             (std::log(static_cast<double>(model.n) / static_cast<double>(advice.argmin)) - 1.0));
  advice.closed_form = model.sigma > 0.0 ? advice.theta / model.sigma
                                         : std::numeric_limits<double>::infinity();
  const uint64_t points = curve_points == 0 ? upper : std::min<uint64_t>(upper, curve_points);
  advice.curve.reserve(points);
  for (uint64_t s = 1; s <= points; ++s) {
    advice.curve.push_back(cost_of_cells(model, static_cast<double>(s)));
  }
  return advice;
}

}  // namespace gridvec::eval
