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

#include "gridvec/io.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace gridvec::io {

static_assert(std::endian::native == std::endian::little,
              "vecs readers assume a little-endian host");

namespace {

template <typename Component>
std::vector<Component> read_vecs_raw(const std::filesystem::path& path, size_t* dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<Component> out;
  int32_t record_dim = 0;
  size_t expected = 0;
  size_t records = 0;
  while (in.read(reinterpret_cast<char*>(&record_dim), sizeof(record_dim))) {
    if (record_dim <= 0) throw Error(path.string() + ": non-positive record dimension");
    if (expected == 0) expected = static_cast<size_t>(record_dim);
    if (static_cast<size_t>(record_dim) != expected) {
      throw Error(path.string() + ": record " + std::to_string(records) +
                  " has dimension " + std::to_string(record_dim) + ", expected " +
                  std::to_string(expected));
    }
    const size_t offset = out.size();
    out.resize(offset + expected);
    if (!in.read(reinterpret_cast<char*>(out.data() + offset),
                 static_cast<std::streamsize>(expected * sizeof(Component)))) {
      throw Error(path.string() + ": truncated record " + std::to_string(records));
    }
    ++records;
  }
  *dim = expected;
  return out;
}

template <typename Component>
void write_vecs_raw(const std::filesystem::path& path, std::span<const Component> data,
                    size_t dim) {
  if (dim == 0 || data.size() % dim != 0) throw Error("write_vecs: bad dimension");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot create " + path.string());
  const int32_t d = static_cast<int32_t>(dim);
  for (size_t i = 0; i < data.size(); i += dim) {
    out.write(reinterpret_cast<const char*>(&d), sizeof(d));
    out.write(reinterpret_cast<const char*>(data.data() + i),
              static_cast<std::streamsize>(dim * sizeof(Component)));
  }
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace

std::vector<float> read_fvecs(const std::filesystem::path& path, size_t* dim) {
  return read_vecs_raw<float>(path, dim);
}

std::vector<float> read_bvecs(const std::filesystem::path& path, size_t* dim) {
  auto bytes = read_vecs_raw<uint8_t>(path, dim);
  return {bytes.begin(), bytes.end()};
}

std::vector<int32_t> read_ivecs(const std::filesystem::path& path, size_t* dim) {
  return read_vecs_raw<int32_t>(path, dim);
}

void write_fvecs(const std::filesystem::path& path, std::span<const float> data, size_t dim) {
  write_vecs_raw(path, data, dim);
}

void write_ivecs(const std::filesystem::path& path, std::span<const int32_t> data,
                 size_t dim) {
  write_vecs_raw(path, data, dim);
}

std::vector<double> read_attributes_csv(const std::filesystem::path& path,
                                        size_t* num_attributes) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(path.string() + ": missing header row");
  size_t columns = 1;
  for (char c : line) columns += c == ',' ? 1 : 0;
  if (columns < 2 || line.rfind("id", 0) != 0) {
    throw Error(path.string() + ": header must be `id,a_1,...,a_m`");
  }
  const size_t m = columns - 1;

  std::vector<std::pair<long long, std::vector<double>>> rows;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> values;
    long long id = -1;
    size_t col = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        if (col == 0) {
          id = std::stoll(cell);
        } else {
          values.push_back(std::stod(cell));
        }
      } catch (const std::exception&) {
        throw Error(path.string() + ":" + std::to_string(line_no) + ": bad value '" + cell +
                    "'");
      }
      ++col;
    }
    if (values.size() != m) {
      throw Error(path.string() + ":" + std::to_string(line_no) + ": expected " +
                  std::to_string(m) + " attributes");
    }
    rows.emplace_back(id, std::move(values));
  }

  std::vector<double> table(rows.size() * m);
  std::vector<bool> seen(rows.size(), false);
  for (auto& [id, values] : rows) {
    if (id < 0 || static_cast<size_t>(id) >= rows.size() || seen[id]) {
      throw Error(path.string() + ": ids must be unique and dense in [0, n)");
    }
    seen[id] = true;
    std::copy(values.begin(), values.end(), table.begin() + id * m);
  }
  *num_attributes = m;
  return table;
}

void write_attributes_csv(const std::filesystem::path& path, const Dataset& dataset) {
  std::ofstream out(path);
  if (!out) throw Error("cannot create " + path.string());
  out << "id";
  for (size_t a = 0; a < dataset.num_attributes(); ++a) out << ",a_" << (a + 1);
  out << "\n";
  out.precision(17);
  for (NodeId i = 0; i < dataset.size(); ++i) {
    out << i;
    for (double v : dataset.attributes(i)) out << "," << v;
    out << "\n";
  }
}

Dataset load_dataset(const std::filesystem::path& vectors,
                     const std::filesystem::path& attributes) {
  size_t dim = 0;
  std::vector<float> data = vectors.extension() == ".bvecs" ? read_bvecs(vectors, &dim)
                                                            : read_fvecs(vectors, &dim);
  size_t m = 0;
  std::vector<double> attrs = read_attributes_csv(attributes, &m);
  if (dim == 0) throw Error(vectors.string() + ": no records");
  if (attrs.size() / m != data.size() / dim) {
    throw Error("vector file has " + std::to_string(data.size() / dim) +
                " records but attribute file has " + std::to_string(attrs.size() / m));
  }
  return Dataset(dim, m, std::move(data), std::move(attrs));
}

std::vector<RangeQuery> read_queries(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<RangeQuery> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      RangeQuery query;
      query.q = j.at("q").get<std::vector<float>>();
      query.k = j.value("k", size_t{10});
      if (j.contains("filters")) {
        for (const auto& f : j.at("filters")) {
          query.predicates.push_back(
              {f.at("attr").get<size_t>(), f.at("low").get<double>(), f.at("high").get<double>()});
        }
      }
      out.push_back(std::move(query));
    } catch (const nlohmann::json::exception& e) {
      throw Error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::string query_to_json(const RangeQuery& query) {
  nlohmann::json j;
  j["q"] = query.q;
  auto filters = nlohmann::json::array();
  for (const auto& p : query.predicates) {
    filters.push_back({{"attr", p.attribute}, {"low", p.low}, {"high", p.high}});
  }
  j["filters"] = std::move(filters);
  j["k"] = query.k;
  return j.dump();
}

void write_queries(const std::filesystem::path& path, std::span<const RangeQuery> queries) {
  std::ofstream out(path);
  if (!out) throw Error("cannot create " + path.string());
  for (const auto& query : queries) out << query_to_json(query) << "\n";
}

}  // namespace gridvec::io
