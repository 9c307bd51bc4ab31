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

// gridvec command-line driver. Every subcommand writes CSV or JSON lines.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gridvec/bench.h"
#include "gridvec/eval.h"
#include "gridvec/index.h"
#include "gridvec/index_io.h"
#include "gridvec/io.h"
#include "gridvec/pipeline.h"
#include "gridvec/schedule.h"
#include "gridvec/search.h"
#include "gridvec/util.h"
#include "json.hpp"

namespace {

using gridvec::CellId;
using gridvec::Error;
using gridvec::NodeId;
using gridvec::RangeQuery;
using nlohmann::json;

// Writes to `path`, or stdout when empty.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw Error("cannot create " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

std::vector<std::vector<NodeId>> read_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::vector<std::vector<NodeId>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(json::parse(line).at("ids").get<std::vector<NodeId>>());
  }
  return out;
}

std::vector<std::vector<NodeId>> oracle_for(const gridvec::Dataset& data,
                                            std::span<const RangeQuery> queries,
                                            gridvec::Metric metric) {
  std::vector<std::vector<NodeId>> out(queries.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (int64_t i = 0; i < static_cast<int64_t>(queries.size()); ++i) {
    out[i] = gridvec::eval::ids_of(gridvec::eval::brute_force_rfnns(data, queries[i], metric));
  }
  return out;
}

gridvec::IncidenceMatrix read_incidence(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  json j = json::parse(in);
  if (j.is_object()) j = j.at("rows");
  std::vector<std::vector<uint8_t>> rows;
  for (const auto& row : j) {
    std::vector<uint8_t> r;
    for (const auto& v : row) r.push_back(v.is_boolean() ? v.get<bool>() : v.get<int>() != 0);
    rows.push_back(std::move(r));
  }
  return gridvec::IncidenceMatrix::from_rows(rows);
}

json plan_json(const gridvec::BatchPlan& plan) {
  json j;
  j["batches"] = plan.batches;
  j["active"] = plan.active;
  std::vector<size_t> counts;
  for (const auto& a : plan.active) counts.push_back(a.size());
  j["active_counts"] = counts;
  j["total_cost"] = plan.total_cost;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Range-filtered vector search over a grid of per-cell proximity graphs"};
  app.set_config("--config", "", "TOML config file; sections name subcommands");
  app.require_subcommand(1);

  // gen-data
  gridvec::eval::DataSpec data_spec;
  bool skewed = false;
  size_t num_query_vectors = 0;
  uint64_t query_vector_seed = 9;
  std::string out_vectors, out_attrs, out_query_vectors;
  auto* gen_data = app.add_subcommand("gen-data", "Synthetic Gaussian-mixture vectors + attributes");
  gen_data->add_option("--n", data_spec.n, "Records")->capture_default_str();
  gen_data->add_option("--dim", data_spec.dim, "Vector dimension")->capture_default_str();
  gen_data->add_option("--attrs", data_spec.num_attributes, "Attributes")->capture_default_str();
  gen_data->add_option("--clusters", data_spec.num_clusters, "Mixture components (0: uniform)")
      ->capture_default_str();
  gen_data->add_option("--std", data_spec.cluster_std, "Component std dev")->capture_default_str();
  gen_data->add_option("--attr-range", data_spec.attribute_range, "Attribute values in [0, range)")
      ->capture_default_str();
  gen_data->add_flag("--skewed", skewed, "Cubic skew on attribute values");
  gen_data->add_option("--seed", data_spec.seed)->capture_default_str();
  gen_data->add_option("--out-vectors", out_vectors, "fvecs output")->required();
  gen_data->add_option("--out-attrs", out_attrs, "CSV output")->required();
  gen_data->add_option("--out-query-vectors", out_query_vectors, "fvecs of mixture query vectors");
  gen_data->add_option("--num-query-vectors", num_query_vectors)->capture_default_str();
  gen_data->add_option("--query-seed", query_vector_seed)->capture_default_str();

  // gen-queries
  gridvec::eval::QuerySpec query_spec;
  std::string law = "uniform";
  std::string vectors_path, attrs_path, query_vectors_path, out_path;
  auto* gen_queries = app.add_subcommand("gen-queries", "Range queries with controlled selectivity");
  gen_queries->add_option("--vectors", vectors_path)->required();
  gen_queries->add_option("--attrs", attrs_path)->required();
  gen_queries->add_option("--query-vectors", query_vectors_path,
                          "fvecs; default: perturbed dataset vectors");
  gen_queries->add_option("--count", query_spec.count)->capture_default_str();
  gen_queries->add_option("--k", query_spec.k)->capture_default_str();
  gen_queries->add_option("--law", law, "uniform | fixed")
      ->check(CLI::IsMember({"uniform", "fixed"}))
      ->capture_default_str();
  gen_queries->add_option("--min-width", query_spec.min_width)->capture_default_str();
  gen_queries->add_option("--max-width", query_spec.max_width)->capture_default_str();
  gen_queries->add_option("--width", query_spec.fixed_width, "Width for --law fixed")
      ->capture_default_str();
  gen_queries->add_option("--filtered-attrs", query_spec.filtered_attributes, "0: all")
      ->capture_default_str();
  gen_queries->add_option("--seed", query_spec.seed)->capture_default_str();
  gen_queries->add_option("--out", out_path, "JSONL output (default stdout)");

  // build
  gridvec::GridParams grid_params;
  gridvec::BuildParams build_params;
  gridvec::HistogramParams hist_params;
  std::string metric_name = "l2", index_path;
  auto* build = app.add_subcommand("build", "Build and serialize an index");
  build->add_option("--vectors", vectors_path)->required();
  build->add_option("--attrs", attrs_path)->required();
  build->add_option("--out", index_path)->required();
  build->add_option("--cells", grid_params.num_cells, "S")->capture_default_str();
  build->add_option("--p", grid_params.p, "Partitioned attributes (0: min(m, 4))")
      ->capture_default_str();
  build->add_option("--partition-attrs", grid_params.attributes, "Explicit attribute list");
  build->add_option("--segments", grid_params.segments, "Explicit segments per attribute");
  build->add_option("--degree", build_params.intra_degree, "d")->capture_default_str();
  build->add_option("--inter-degree", build_params.inter_degree, "l")->capture_default_str();
  build->add_option("--knn-iters", build_params.knn_iterations)->capture_default_str();
  build->add_option("--ef", build_params.ef_construction)->capture_default_str();
  build->add_option("--seed", build_params.rng_seed)->capture_default_str();
  build->add_option("--metric", metric_name, "l2 | ip")->capture_default_str();
  build->add_option("--clusters", hist_params.num_clusters, "K_c")->capture_default_str();
  build->add_option("--top-m", hist_params.top_m)->capture_default_str();
  build->add_option("--kmeans-iters", hist_params.max_iterations)->capture_default_str();

  // query
  gridvec::SearchParams search_params;
  size_t k_override = 0;
  bool no_order = false, no_inter_seed = false;
  std::string queries_path;
  auto add_search_options = [&](CLI::App* cmd) {
    cmd->add_option("--s-thre", search_params.s_thre, "Fallback threshold (0: S-1)");
    cmd->add_option("--entry-leaders", search_params.entry_leaders, "L (0: k)");
    cmd->add_option("--entry-random", search_params.entry_random, "0: d");
    cmd->add_option("--rerank-depth", search_params.rerank_depth, "0: k");
    cmd->add_option("--search-seed", search_params.rng_seed)->capture_default_str();
    cmd->add_flag("--no-order", no_order, "Visit cells in id order");
    cmd->add_flag("--no-inter-seed", no_inter_seed, "Random-only entries at transitions");
    cmd->add_option("--k", k_override, "Override per-query k");
  };
  auto* query = app.add_subcommand("query", "Answer JSONL range queries");
  query->add_option("--index", index_path)->required();
  query->add_option("--queries", queries_path)->required();
  query->add_option("--beam", search_params.beam)->capture_default_str();
  query->add_option("--out", out_path);
  add_search_options(query);

  // oracle
  auto* oracle = app.add_subcommand("oracle", "Exact filtered top-k by brute force");
  oracle->add_option("--vectors", vectors_path)->required();
  oracle->add_option("--attrs", attrs_path)->required();
  oracle->add_option("--queries", queries_path)->required();
  oracle->add_option("--metric", metric_name)->capture_default_str();
  oracle->add_option("--k", k_override, "Override per-query k");
  oracle->add_option("--out", out_path);

  // bench
  std::vector<size_t> beams = {16, 32, 64, 128, 256};
  std::string truth_path, timeline_path;
  bool out_of_core = false, simulated = false, no_schedule = false;
  gridvec::OutOfCoreParams ooc;
  auto* bench = app.add_subcommand("bench", "Recall/QPS sweep over beam widths");
  bench->add_option("--index", index_path)->required();
  bench->add_option("--queries", queries_path)->required();
  bench->add_option("--truth", truth_path, "Oracle JSONL (default: computed)");
  bench->add_option("--beams", beams)->capture_default_str()->delimiter(',');
  bench->add_option("--out", out_path, "CSV output (default stdout)");
  bench->add_flag("--out-of-core", out_of_core, "Stream cell batches from the index file");
  bench->add_option("--memory-cap", ooc.budget.memory_cap, "Bytes per staged batch")
      ->capture_default_str();
  bench->add_option("--stage-depth", ooc.budget.stage_depth)->capture_default_str();
  bench->add_option("--batch-cells", ooc.batch_cells, "b (0: fit memory cap)");
  bench->add_option("--bandwidth", ooc.budget.bandwidth, "Transfer link, bytes/s");
  bench->add_flag("--simulated", simulated, "Deterministic simulated clock");
  bench->add_flag("--no-schedule", no_schedule, "Identity batch packing");
  bench->add_option("--timeline", timeline_path, "Timeline CSV of the last beam");
  add_search_options(bench);

  // schedule
  std::string incidence_path;
  size_t batch_size = 2;
  bool exact = false;
  auto* schedule = app.add_subcommand("schedule", "Batch cells to minimize active queries");
  schedule->add_option("--incidence", incidence_path, "JSON 0/1 rows (query x cell)")->required();
  schedule->add_option("--batch-size", batch_size, "b")->capture_default_str();
  schedule->add_flag("--exact", exact, "Exhaustive optimum (<= 10 cells)");

  // advise-cells
  gridvec::eval::CostModel cost;
  size_t curve_points = 0;
  auto* advise = app.add_subcommand("advise-cells", "Cell count minimizing the cost model");
  advise->add_option("--n", cost.n)->capture_default_str();
  advise->add_option("--alpha", cost.alpha)->capture_default_str();
  advise->add_option("--sigma", cost.sigma)->capture_default_str();
  advise->add_option("--curve-points", curve_points, "Cap on emitted curve (0: full)")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    search_params.use_ordering = !no_order;
    search_params.use_inter_seed = !no_inter_seed;
    auto load_queries = [&] {
      auto qs = gridvec::io::read_queries(queries_path);
      if (k_override != 0) {
        for (auto& q : qs) q.k = k_override;
      }
      return qs;
    };

    if (*gen_data) {
      data_spec.attribute_law =
          skewed ? gridvec::eval::AttributeLaw::kSkewed : gridvec::eval::AttributeLaw::kUniform;
      const auto data = gridvec::eval::generate_dataset(data_spec);
      gridvec::io::write_fvecs(out_vectors, data.vectors(), data.dim());
      gridvec::io::write_attributes_csv(out_attrs, data);
      if (!out_query_vectors.empty()) {
        const auto qv =
            gridvec::eval::generate_query_vectors(data_spec, num_query_vectors, query_vector_seed);
        std::vector<float> flat;
        for (const auto& v : qv) flat.insert(flat.end(), v.begin(), v.end());
        gridvec::io::write_fvecs(out_query_vectors, flat, data.dim());
      }
    } else if (*gen_queries) {
      query_spec.law = law == "fixed" ? gridvec::eval::SelectivityLaw::kFixed
                                      : gridvec::eval::SelectivityLaw::kUniform;
      const auto data = gridvec::io::load_dataset(vectors_path, attrs_path);
      std::vector<std::vector<float>> vectors;
      if (!query_vectors_path.empty()) {
        size_t dim = 0;
        const auto flat = gridvec::io::read_fvecs(query_vectors_path, &dim);
        for (size_t i = 0; i + dim <= flat.size(); i += dim) {
          vectors.emplace_back(flat.begin() + i, flat.begin() + i + dim);
        }
      } else {
        std::mt19937_64 rng(gridvec::mix_seed(query_spec.seed, 0x9e7));
        std::uniform_int_distribution<size_t> pick(0, data.size() - 1);
        std::normal_distribution<float> noise(0.0f, 0.01f);
        for (size_t i = 0; i < query_spec.count; ++i) {
          const auto v = data.vector(static_cast<NodeId>(pick(rng)));
          std::vector<float> q(v.begin(), v.end());
          for (auto& x : q) x += noise(rng);
          vectors.push_back(std::move(q));
        }
      }
      if (vectors.empty()) throw Error("no query vectors");
      const auto generated = gridvec::eval::generate_queries(query_spec, data, vectors);
      Output out(out_path);
      for (const auto& g : generated) {
        json j = json::parse(gridvec::io::query_to_json(g.query));
        j["widths"] = g.widths;
        j["selectivity"] = g.measured_selectivity;
        j["placement"] = law == "fixed" ? "fixed-width,uniform-position"
                                        : "uniform-width,uniform-position";
        out.stream() << j.dump() << "\n";
      }
    } else if (*build) {
      build_params.metric = gridvec::parse_metric(metric_name);
      auto data = gridvec::io::load_dataset(vectors_path, attrs_path);
      const auto index =
          gridvec::build_index(std::move(data), grid_params, build_params, hist_params);
      gridvec::save_index(index, index_path);
      json j;
      j["n"] = index.size();
      j["cells"] = index.num_cells();
      j["intra_edges"] = index.total_intra_edges();
      j["inter_edges"] = index.inter.total_edges();
      std::cout << j.dump() << "\n";
    } else if (*query) {
      const auto index = gridvec::load_index(index_path);
      const auto qs = load_queries();
      const auto results = gridvec::search_batch(index, qs, search_params);
      Output out(out_path);
      for (size_t i = 0; i < results.size(); ++i) {
        json j;
        j["query"] = i;
        j["ids"] = gridvec::eval::ids_of(results[i].neighbors);
        std::vector<float> d;
        for (const auto& n : results[i].neighbors) d.push_back(n.distance);
        j["distances"] = d;
        j["fallback"] = results[i].used_fallback;
        j["distance_computations"] = results[i].stats.distance_computations;
        out.stream() << j.dump() << "\n";
      }
    } else if (*oracle) {
      const auto data = gridvec::io::load_dataset(vectors_path, attrs_path);
      const auto qs = load_queries();
      for (const auto& q : qs) q.validate(data.dim(), data.num_attributes());
      const auto truth = oracle_for(data, qs, gridvec::parse_metric(metric_name));
      Output out(out_path);
      for (size_t i = 0; i < truth.size(); ++i) {
        out.stream() << json{{"query", i}, {"ids", truth[i]}}.dump() << "\n";
      }
    } else if (*bench) {
      const auto qs = load_queries();
      Output out(out_path);
      std::vector<gridvec::eval::BenchRow> rows;
      if (out_of_core) {
        const auto file = gridvec::IndexFile::open(index_path);
        const auto truth = truth_path.empty()
                               ? oracle_for(file.read_dataset(), qs, file.build_params().metric)
                               : read_truth(truth_path);
        ooc.simulated = simulated;
        ooc.use_schedule = !no_schedule;
        std::vector<std::vector<gridvec::TimelineSpan>> timelines;
        rows = gridvec::eval::bench_out_of_core(file, qs, truth, beams, search_params, ooc,
                                                &timelines);
        if (!timeline_path.empty() && !timelines.empty()) {
          Output tl(timeline_path);
          gridvec::eval::write_timeline_csv(tl.stream(), timelines.back());
        }
      } else {
        const auto index = gridvec::load_index(index_path);
        const auto truth = truth_path.empty() ? oracle_for(index.data, qs, index.params.metric)
                                              : read_truth(truth_path);
        rows = gridvec::eval::bench_in_memory(index, qs, truth, beams, search_params);
      }
      gridvec::eval::write_bench_csv(out.stream(), rows);
    } else if (*schedule) {
      const auto a = read_incidence(incidence_path);
      const auto cells = a.referenced_cells();
      const auto plan = exact ? gridvec::schedule_exact(a, cells, batch_size)
                              : gridvec::schedule_greedy(a, cells, batch_size);
      json j = plan_json(plan);
      j["method"] = exact ? "exact" : "greedy";
      j["identity_cost"] = gridvec::schedule_identity(a, cells, batch_size).total_cost;
      std::cout << j.dump() << "\n";
    } else if (*advise) {
      const auto advice = gridvec::eval::advise_cell_count(cost, curve_points);
      json j;
      j["argmin"] = advice.argmin;
      j["theta"] = advice.theta;
      j["closed_form"] = advice.closed_form;
      j["curve"] = advice.curve;
      std::cout << j.dump() << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "gridvec: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
