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
#include "gridvec/index_io.h"
#include "test_util.h"

using namespace gridvec;
using Catch::Matchers::ContainsSubstring;

namespace {

const GmgIndex& small_index() {
  static const GmgIndex index = [] {
    GridParams g;
    g.num_cells = 8;
    BuildParams p;
    p.intra_degree = 6;
    HistogramParams h;
    h.num_clusters = 16;
    return build_index(testing::random_dataset(800, 8, 3, 17, 50), g, p, h);
  }();
  return index;
}

void check_same(const GmgIndex& a, const GmgIndex& b) {
  CHECK(a.format_version == b.format_version);
  CHECK(a.params.intra_degree == b.params.intra_degree);
  CHECK(a.params.inter_degree == b.params.inter_degree);
  CHECK(a.params.rng_seed == b.params.rng_seed);
  CHECK(a.grid.attributes == b.grid.attributes);
  CHECK(a.grid.segments == b.grid.segments);
  CHECK(a.grid.boundaries == b.grid.boundaries);
  CHECK(a.grid.segment_lo == b.grid.segment_lo);
  CHECK(a.grid.segment_hi == b.grid.segment_hi);
  CHECK(a.assignment.cell_of == b.assignment.cell_of);
  CHECK(a.assignment.members == b.assignment.members);
  REQUIRE(a.intra.size() == b.intra.size());
  for (size_t c = 0; c < a.intra.size(); ++c) {
    CHECK(a.intra[c].degree == b.intra[c].degree);
    CHECK(a.intra[c].adjacency == b.intra[c].adjacency);
  }
  CHECK(a.inter.slots == b.inter.slots);
  CHECK(a.histogram.centroids == b.histogram.centroids);
  CHECK(a.histogram.counts == b.histogram.counts);
  CHECK(a.quantizer.codes() == b.quantizer.codes());
  CHECK(a.quantizer.lo() == b.quantizer.lo());
  CHECK(a.data.vectors() == b.data.vectors());
  CHECK(a.data.attribute_table() == b.data.attribute_table());
}

}  // namespace

TEST_CASE("serialize then deserialize is the identity", "[index_io]") {
  const auto bytes = serialize(small_index());
  check_same(small_index(), deserialize(bytes));
  CHECK(serialize(deserialize(bytes)) == bytes);
}

TEST_CASE("save and load through a file", "[index_io]") {
  const auto path = std::filesystem::temp_directory_path() / "gridvec_test_index.gmg";
  save_index(small_index(), path);
  check_same(small_index(), load_index(path));
  const auto file = IndexFile::open(path);
  CHECK(file.header().n == 800);
  CHECK(file.header().num_cells == 8);
  CHECK(file.file_size() == std::filesystem::file_size(path));
}

TEST_CASE("per-cell sections decode independently", "[index_io]") {
  const auto file = IndexFile::from_bytes(serialize(small_index()));
  const auto& index = small_index();
  // Cell 3 without touching cells 0..2.
  const auto g3 = file.read_intra(3);
  CHECK(g3.adjacency == index.intra[3].adjacency);
  CHECK(file.section(SectionKind::kIntra, 3).offset > file.section(SectionKind::kIntra, 2).offset);
  for (NodeId v : {0u, 5u, 799u}) {
    const auto slots = file.inter_slots(v);
    CHECK(std::vector<NodeId>(slots.begin(), slots.end()) ==
          std::vector<NodeId>(index.inter.slots.begin() + v * 8 * 2,
                              index.inter.slots.begin() + (v + 1) * 8 * 2));
    CHECK(std::vector<float>(file.vector(v).begin(), file.vector(v).end()) ==
          std::vector<float>(index.data.vector(v).begin(), index.data.vector(v).end()));
  }
  CHECK(file.read_attributes() == index.data.attribute_table());
  CHECK(file.read_assignment().cell_of == index.assignment.cell_of);
  CHECK(file.read_quantizer().codes() == index.quantizer.codes());
  CHECK(file.read_histogram().counts == index.histogram.counts);
  CHECK_THROWS_AS(file.inter_slots(800), Error);
}

TEST_CASE("sections are 8-byte aligned and inside the file", "[index_io]") {
  const auto bytes = serialize(small_index());
  const auto file = IndexFile::from_bytes(bytes);
  for (const auto& e : file.header().sections) {
    CHECK(e.offset % 8 == 0);
    CHECK(e.offset + e.size <= bytes.size());
  }
  CHECK(file.header().sections.size() == 7 + 8);
}

TEST_CASE("truncated files name the missing section", "[index_io]") {
  auto bytes = serialize(small_index());
  const auto file = IndexFile::from_bytes(bytes);
  const auto& intra3 = file.section(SectionKind::kIntra, 3);
  bytes.resize(intra3.offset + intra3.size / 2);
  CHECK_THROWS_WITH(IndexFile::from_bytes(bytes), ContainsSubstring("intra[3]"));
  CHECK_THROWS_WITH(deserialize(bytes), ContainsSubstring("truncated"));
  bytes.resize(10);
  CHECK_THROWS_WITH(IndexFile::from_bytes(bytes), ContainsSubstring("header"));
}

TEST_CASE("bad magic and version are rejected", "[index_io]") {
  auto bytes = serialize(small_index());
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_WITH(deserialize(bad_magic), ContainsSubstring("magic"));
  auto bad_version = bytes;
  bad_version[4] = 99;
  CHECK_THROWS_WITH(deserialize(bad_version), ContainsSubstring("version"));
}

TEST_CASE("identical builds serialize to identical bytes", "[index_io]") {
  const auto data = testing::random_dataset(500, 8, 2, 99, 40);
  HistogramParams h;
  h.num_clusters = 16;
  const auto a = serialize(build_index(data, GridParams{}, BuildParams{}, h));
  const auto b = serialize(build_index(data, GridParams{}, BuildParams{}, h));
  CHECK(a == b);
}
