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

#include <filesystem>
#include <fstream>
#include <vector>

#include "catch_amalgamated.hpp"
#include "gridvec/io.h"
#include "test_util.h"

using namespace gridvec;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "gridvec_test_io";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("fvecs round trip", "[io]") {
  const std::vector<float> data = {1, 2, 3, 4, 5, 6};
  const auto path = temp_path("a.fvecs");
  io::write_fvecs(path, data, 3);
  size_t dim = 0;
  CHECK(io::read_fvecs(path, &dim) == data);
  CHECK(dim == 3);
  CHECK(fs::file_size(path) == 2 * (4 + 3 * 4));
}

TEST_CASE("ivecs round trip", "[io]") {
  const std::vector<int32_t> data = {7, -1, 3, 9};
  const auto path = temp_path("a.ivecs");
  io::write_ivecs(path, data, 2);
  size_t dim = 0;
  CHECK(io::read_ivecs(path, &dim) == data);
  CHECK(dim == 2);
}

TEST_CASE("bvecs reads uint8 payloads", "[io]") {
  const auto path = temp_path("a.bvecs");
  {
    std::ofstream out(path, std::ios::binary);
    const int32_t dim = 2;
    const uint8_t a[2] = {0, 255};
    const uint8_t b[2] = {7, 9};
    out.write(reinterpret_cast<const char*>(&dim), 4);
    out.write(reinterpret_cast<const char*>(a), 2);
    out.write(reinterpret_cast<const char*>(&dim), 4);
    out.write(reinterpret_cast<const char*>(b), 2);
  }
  size_t dim = 0;
  CHECK(io::read_bvecs(path, &dim) == std::vector<float>{0, 255, 7, 9});
}

TEST_CASE("vecs readers reject malformed files", "[io]") {
  const auto path = temp_path("bad.fvecs");
  {
    std::ofstream out(path, std::ios::binary);
    const int32_t dim = 4;
    const float x = 1.0f;
    out.write(reinterpret_cast<const char*>(&dim), 4);
    out.write(reinterpret_cast<const char*>(&x), 4);  // truncated record
  }
  size_t dim = 0;
  CHECK_THROWS_AS(io::read_fvecs(path, &dim), Error);
  CHECK_THROWS_AS(io::read_fvecs(temp_path("missing.fvecs"), &dim), Error);
}

TEST_CASE("attribute CSV and dataset loading", "[io]") {
  const auto data = testing::random_dataset(20, 4, 3, 5);
  const auto vec_path = temp_path("d.fvecs");
  const auto attr_path = temp_path("d.csv");
  io::write_fvecs(vec_path, data.vectors(), data.dim());
  io::write_attributes_csv(attr_path, data);
  const auto loaded = io::load_dataset(vec_path, attr_path);
  CHECK(loaded.size() == 20);
  CHECK(loaded.num_attributes() == 3);
  CHECK(loaded.vectors() == data.vectors());
  CHECK(loaded.attribute_table() == data.attribute_table());
  std::ifstream in(attr_path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "id,a_1,a_2,a_3");
}

TEST_CASE("attribute CSV errors", "[io]") {
  const auto path = temp_path("gap.csv");
  {
    std::ofstream out(path);
    out << "id,a_1\n0,1\n2,5\n";  // id 1 missing
  }
  size_t m = 0;
  CHECK_THROWS_AS(io::read_attributes_csv(path, &m), Error);
}

TEST_CASE("query JSONL round trip", "[io]") {
  RangeQuery q;
  q.q = {0.5f, -1.25f};
  q.k = 7;
  q.predicates = {{1, 2.0, 3.5}};
  const auto path = temp_path("q.jsonl");
  io::write_queries(path, std::vector<RangeQuery>{q, q});
  const auto back = io::read_queries(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].q == q.q);
  CHECK(back[0].k == 7);
  REQUIRE(back[0].predicates.size() == 1);
  CHECK(back[0].predicates[0].attribute == 1);
  CHECK(back[0].predicates[0].low == 2.0);
  CHECK(back[0].predicates[0].high == 3.5);
}

TEST_CASE("query JSONL errors name the line", "[io]") {
  const auto path = temp_path("badq.jsonl");
  {
    std::ofstream out(path);
    out << "{\"q\":[1,2],\"k\":3}\n{\"k\":3}\n";
  }
  CHECK_THROWS_WITH(io::read_queries(path), Catch::Matchers::ContainsSubstring(":2:"));
}
