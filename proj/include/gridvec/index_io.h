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

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gridvec/index.h"

namespace gridvec {

enum class SectionKind : uint32_t {
  kGrid = 1,
  kAssignment = 2,
  kIntra = 3,  // one per cell
  kInter = 4,
  kHistogram = 5,
  kQuantizer = 6,
  kAttributes = 7,
  kVectors = 8,
};

std::string section_name(SectionKind kind, uint32_t cell);

struct SectionEntry {
  SectionKind kind;
  uint32_t cell;
  uint64_t offset;
  uint64_t size;
};

struct IndexHeader {
  uint32_t version = kFormatVersion;
  uint64_t n = 0;
  uint32_t dim = 0;
  uint32_t num_attributes = 0;
  uint32_t p = 0;
  uint32_t num_cells = 0;
  uint32_t intra_degree = 0;
  uint32_t inter_degree = 0;
  uint64_t seed = 0;
  uint32_t metric = 0;
  uint32_t ef_construction = 0;
  uint32_t knn_iterations = 0;
  std::vector<SectionEntry> sections;
};

// Serialized layout: magic "GMG1", little-endian header, section table, then
// 8-byte aligned sections. Sections can be decoded independently.
std::vector<uint8_t> serialize(const GmgIndex& index);
GmgIndex deserialize(std::span<const uint8_t> bytes);

void save_index(const GmgIndex& index, const std::filesystem::path& path);
GmgIndex load_index(const std::filesystem::path& path);

// Read-only view of a serialized index backed by a memory map (or an owned
// buffer). Every accessor decodes only the section it needs.
class IndexFile {
 public:
  static IndexFile open(const std::filesystem::path& path);
  static IndexFile from_bytes(std::vector<uint8_t> bytes);

  IndexFile(IndexFile&&) noexcept;
  IndexFile& operator=(IndexFile&&) noexcept;
  ~IndexFile();

  const IndexHeader& header() const { return header_; }
  size_t file_size() const { return size_; }
  const SectionEntry& section(SectionKind kind, uint32_t cell = 0) const;

  GridSpec read_grid() const;
  CellAssignment read_assignment() const;
  IntraCellGraph read_intra(CellId cell) const;
  InterCellEdges read_inter() const;
  // All S*l inter slots of one node, referencing the mapping directly.
  std::span<const NodeId> inter_slots(NodeId node) const;
  ClusterHistogram read_histogram() const;
  ScalarQuantizer read_quantizer() const;
  std::vector<double> read_attributes() const;
  std::span<const float> vector(NodeId node) const;
  Dataset read_dataset() const;
  BuildParams build_params() const;

  GmgIndex load() const;

 private:
  IndexFile() = default;
  void parse_header();
  std::span<const uint8_t> section_bytes(const SectionEntry& entry) const;

  const uint8_t* data_ = nullptr;
  size_t size_ = 0;
  std::vector<uint8_t> owned_;
  void* mapping_ = nullptr;
  IndexHeader header_;
};

}  // namespace gridvec
