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

#include "gridvec/index_io.h"

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <bit>
#include <cstring>
#include <fstream>

namespace gridvec {

static_assert(std::endian::native == std::endian::little,
              "index format is little-endian; big-endian hosts are not supported");

namespace {

constexpr char kMagic[4] = {'G', 'M', 'G', '1'};
constexpr size_t kFixedHeaderBytes = 64;
constexpr size_t kSectionEntryBytes = 24;

class ByteWriter {
 public:
  template <typename T>
  void put(T value) {
    const auto* p = reinterpret_cast<const uint8_t*>(&value);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  template <typename T>
  void put_array(std::span<const T> values) {
    const auto* p = reinterpret_cast<const uint8_t*>(values.data());
    buf_.insert(buf_.end(), p, p + values.size_bytes());
  }
  void align8() { buf_.resize((buf_.size() + 7) & ~size_t{7}, 0); }
  std::vector<uint8_t>& bytes() { return buf_; }

 private:
  std::vector<uint8_t> buf_;
};

class ByteReader {
 public:
  ByteReader(std::span<const uint8_t> bytes, std::string what)
      : bytes_(bytes), what_(std::move(what)) {}

  template <typename T>
  T get() {
    require(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  template <typename T>
  std::vector<T> get_array(size_t count) {
    require(count * sizeof(T));
    std::vector<T> out(count);
    std::memcpy(out.data(), bytes_.data() + pos_, count * sizeof(T));
    pos_ += count * sizeof(T);
    return out;
  }
  // Zero-copy view; the section layout keeps these arrays aligned.
  template <typename T>
  std::span<const T> view_array(size_t count) {
    require(count * sizeof(T));
    const auto* p = reinterpret_cast<const T*>(bytes_.data() + pos_);
    pos_ += count * sizeof(T);
    return {p, count};
  }

 private:
  void require(size_t n) const {
    if (pos_ + n > bytes_.size()) {
      throw Error("index section '" + what_ + "' is corrupt: needs " +
                  std::to_string(pos_ + n) + " bytes, has " + std::to_string(bytes_.size()));
    }
  }

  std::span<const uint8_t> bytes_;
  std::string what_;
  size_t pos_ = 0;
};

std::vector<uint8_t> encode_grid(const GridSpec& grid) {
  ByteWriter w;
  w.put<uint64_t>(grid.attributes.size());
  for (size_t i = 0; i < grid.attributes.size(); ++i) {
    w.put<uint64_t>(grid.attributes[i]);
    w.put<uint64_t>(grid.segments[i]);
    w.put_array<double>(grid.boundaries[i]);
    w.put_array<double>(grid.segment_lo[i]);
    w.put_array<double>(grid.segment_hi[i]);
  }
  return std::move(w.bytes());
}

std::vector<uint8_t> encode_assignment(const CellAssignment& a) {
  ByteWriter w;
  w.put<uint64_t>(a.cell_of.size());
  w.put<uint64_t>(a.members.size());
  w.put<uint64_t>(a.segment_of.size());
  for (const auto& m : a.members) w.put<uint64_t>(m.size());
  w.put_array<CellId>(a.cell_of);
  for (const auto& m : a.members) w.put_array<NodeId>(m);
  for (const auto& s : a.segment_of) w.put_array<uint32_t>(s);
  return std::move(w.bytes());
}

std::vector<uint8_t> encode_intra(const IntraCellGraph& g, std::span<const NodeId> members) {
  ByteWriter w;
  w.put<uint64_t>(members.size());
  w.put<uint64_t>(g.degree);
  w.put_array<NodeId>(members);
  w.align8();
  w.put_array<NodeId>(g.adjacency);
  return std::move(w.bytes());
}

std::vector<uint8_t> encode_inter(const InterCellEdges& e) {
  ByteWriter w;
  w.put<uint64_t>(e.num_cells);
  w.put<uint64_t>(e.inter_degree);
  w.put_array<NodeId>(e.slots);
  return std::move(w.bytes());
}

std::vector<uint8_t> encode_histogram(const ClusterHistogram& h) {
  ByteWriter w;
  w.put<uint64_t>(h.dim);
  w.put<uint64_t>(h.num_clusters);
  w.put<uint64_t>(h.num_cells);
  w.put<uint64_t>(h.top_m);
  w.put_array<float>(h.centroids);
  w.put_array<uint32_t>(h.counts);
  return std::move(w.bytes());
}

std::vector<uint8_t> encode_quantizer(const ScalarQuantizer& q) {
  ByteWriter w;
  w.put<uint64_t>(q.dim());
  w.put<uint64_t>(q.size());
  w.put_array<float>(q.lo());
  w.put_array<float>(q.step());
  w.put_array<uint8_t>(q.codes());
  return std::move(w.bytes());
}

std::vector<uint8_t> encode_attributes(const Dataset& d) {
  ByteWriter w;
  w.put<uint64_t>(d.size());
  w.put<uint64_t>(d.num_attributes());
  w.put_array<double>(d.attribute_table());
  return std::move(w.bytes());
}

std::vector<uint8_t> encode_vectors(const Dataset& d) {
  ByteWriter w;
  w.put<uint64_t>(d.size());
  w.put<uint64_t>(d.dim());
  w.put_array<float>(d.vectors());
  return std::move(w.bytes());
}

struct MappedRegion {
  void* addr = nullptr;
  size_t size = 0;
};

}  // namespace

std::string section_name(SectionKind kind, uint32_t cell) {
  switch (kind) {
    case SectionKind::kGrid: return "grid";
    case SectionKind::kAssignment: return "assignment";
    case SectionKind::kIntra: return "intra[" + std::to_string(cell) + "]";
    case SectionKind::kInter: return "inter";
    case SectionKind::kHistogram: return "histogram";
    case SectionKind::kQuantizer: return "quantizer";
    case SectionKind::kAttributes: return "attributes";
    case SectionKind::kVectors: return "vectors";
  }
  return "unknown(" + std::to_string(static_cast<uint32_t>(kind)) + ")";
}

std::vector<uint8_t> serialize(const GmgIndex& index) {
  struct Pending {
    SectionKind kind;
    uint32_t cell;
    std::vector<uint8_t> bytes;
  };
  std::vector<Pending> sections;
  sections.push_back({SectionKind::kGrid, 0, encode_grid(index.grid)});
  sections.push_back({SectionKind::kAssignment, 0, encode_assignment(index.assignment)});
  for (CellId c = 0; c < index.intra.size(); ++c) {
    sections.push_back(
        {SectionKind::kIntra, c, encode_intra(index.intra[c], index.assignment.members[c])});
  }
  sections.push_back({SectionKind::kInter, 0, encode_inter(index.inter)});
  sections.push_back({SectionKind::kHistogram, 0, encode_histogram(index.histogram)});
  sections.push_back({SectionKind::kQuantizer, 0, encode_quantizer(index.quantizer)});
  sections.push_back({SectionKind::kAttributes, 0, encode_attributes(index.data)});
  sections.push_back({SectionKind::kVectors, 0, encode_vectors(index.data)});

  ByteWriter w;
  w.put_array<char>(std::span<const char>(kMagic, 4));
  w.put<uint32_t>(index.format_version);
  w.put<uint64_t>(index.data.size());
  w.put<uint32_t>(static_cast<uint32_t>(index.data.dim()));
  w.put<uint32_t>(static_cast<uint32_t>(index.data.num_attributes()));
  w.put<uint32_t>(static_cast<uint32_t>(index.grid.num_partitioned()));
  w.put<uint32_t>(static_cast<uint32_t>(index.intra.size()));
  w.put<uint32_t>(static_cast<uint32_t>(index.params.intra_degree));
  w.put<uint32_t>(static_cast<uint32_t>(index.params.inter_degree));
  w.put<uint64_t>(index.params.rng_seed);
  w.put<uint32_t>(static_cast<uint32_t>(index.params.metric));
  w.put<uint32_t>(static_cast<uint32_t>(index.params.ef_construction));
  w.put<uint32_t>(static_cast<uint32_t>(index.params.knn_iterations));
  w.put<uint32_t>(static_cast<uint32_t>(sections.size()));

  uint64_t offset = kFixedHeaderBytes + kSectionEntryBytes * sections.size();
  offset = (offset + 7) & ~uint64_t{7};
  for (const auto& s : sections) {
    w.put<uint32_t>(static_cast<uint32_t>(s.kind));
    w.put<uint32_t>(s.cell);
    w.put<uint64_t>(offset);
    w.put<uint64_t>(s.bytes.size());
    offset = (offset + s.bytes.size() + 7) & ~uint64_t{7};
  }
  w.align8();
  for (const auto& s : sections) {
    w.put_array<uint8_t>(s.bytes);
    w.align8();
  }
  return std::move(w.bytes());
}

void save_index(const GmgIndex& index, const std::filesystem::path& path) {
  const auto bytes = serialize(index);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot create index file " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing index file " + path.string());
}

GmgIndex deserialize(std::span<const uint8_t> bytes) {
  return IndexFile::from_bytes({bytes.begin(), bytes.end()}).load();
}

GmgIndex load_index(const std::filesystem::path& path) { return IndexFile::open(path).load(); }

IndexFile IndexFile::open(const std::filesystem::path& path) {
  const int fd = ::open(path.c_str(), O_RDONLY);
  if (fd < 0) throw Error("cannot open index file " + path.string());
  struct stat st {};
  if (::fstat(fd, &st) != 0) {
    ::close(fd);
    throw Error("cannot stat index file " + path.string());
  }
  IndexFile file;
  file.size_ = static_cast<size_t>(st.st_size);
  if (file.size_ > 0) {
    void* addr = ::mmap(nullptr, file.size_, PROT_READ, MAP_SHARED, fd, 0);
    if (addr == MAP_FAILED) {
      ::close(fd);
      throw Error("cannot map index file " + path.string());
    }
    file.mapping_ = addr;
    file.data_ = static_cast<const uint8_t*>(addr);
  }
  ::close(fd);
  file.parse_header();
  return file;
}

IndexFile IndexFile::from_bytes(std::vector<uint8_t> bytes) {
  IndexFile file;
  file.owned_ = std::move(bytes);
  file.data_ = file.owned_.data();
  file.size_ = file.owned_.size();
  file.parse_header();
  return file;
}

IndexFile::IndexFile(IndexFile&& other) noexcept { *this = std::move(other); }

IndexFile& IndexFile::operator=(IndexFile&& other) noexcept {
  if (this == &other) return *this;
  if (mapping_ != nullptr) ::munmap(mapping_, size_);
  owned_ = std::move(other.owned_);
  mapping_ = other.mapping_;
  size_ = other.size_;
  data_ = mapping_ != nullptr ? static_cast<const uint8_t*>(mapping_) : owned_.data();
  header_ = std::move(other.header_);
  other.mapping_ = nullptr;
  other.data_ = nullptr;
  other.size_ = 0;
  return *this;
}

IndexFile::~IndexFile() {
  if (mapping_ != nullptr) ::munmap(mapping_, size_);
}

void IndexFile::parse_header() {
  if (size_ < kFixedHeaderBytes) {
    throw Error("index file truncated: missing header (" + std::to_string(size_) +
                " bytes)");
  }
  if (std::memcmp(data_, kMagic, 4) != 0) throw Error("bad index magic (expected GMG1)");
  ByteReader r({data_ + 4, size_ - 4}, "header");
  header_.version = r.get<uint32_t>();
  if (header_.version != kFormatVersion) {
    throw Error("unsupported index format version " + std::to_string(header_.version));
  }
  header_.n = r.get<uint64_t>();
  header_.dim = r.get<uint32_t>();
  header_.num_attributes = r.get<uint32_t>();
  header_.p = r.get<uint32_t>();
  header_.num_cells = r.get<uint32_t>();
  header_.intra_degree = r.get<uint32_t>();
  header_.inter_degree = r.get<uint32_t>();
  header_.seed = r.get<uint64_t>();
  header_.metric = r.get<uint32_t>();
  header_.ef_construction = r.get<uint32_t>();
  header_.knn_iterations = r.get<uint32_t>();
  const auto num_sections = r.get<uint32_t>();
  if (kFixedHeaderBytes + kSectionEntryBytes * num_sections > size_) {
    throw Error("index file truncated: section table incomplete");
  }
  for (uint32_t i = 0; i < num_sections; ++i) {
    SectionEntry e{};
    e.kind = static_cast<SectionKind>(r.get<uint32_t>());
    e.cell = r.get<uint32_t>();
    e.offset = r.get<uint64_t>();
    e.size = r.get<uint64_t>();
    if (e.offset + e.size > size_) {
      throw Error("index file truncated: section '" + section_name(e.kind, e.cell) +
                  "' needs bytes up to " + std::to_string(e.offset + e.size) +
                  " but the file has " + std::to_string(size_));
    }
    header_.sections.push_back(e);
  }
}

const SectionEntry& IndexFile::section(SectionKind kind, uint32_t cell) const {
  for (const auto& e : header_.sections) {
    if (e.kind == kind && e.cell == cell) return e;
  }
  throw Error("index file has no section '" + section_name(kind, cell) + "'");
}

std::span<const uint8_t> IndexFile::section_bytes(const SectionEntry& entry) const {
  return {data_ + entry.offset, entry.size};
}

GridSpec IndexFile::read_grid() const {
  ByteReader r(section_bytes(section(SectionKind::kGrid)), "grid");
  GridSpec grid;
  const auto p = r.get<uint64_t>();
  for (uint64_t i = 0; i < p; ++i) {
    grid.attributes.push_back(r.get<uint64_t>());
    const auto s = r.get<uint64_t>();
    grid.segments.push_back(s);
    grid.boundaries.push_back(r.get_array<double>(s - 1));
    grid.segment_lo.push_back(r.get_array<double>(s));
    grid.segment_hi.push_back(r.get_array<double>(s));
  }
  return grid;
}

CellAssignment IndexFile::read_assignment() const {
  ByteReader r(section_bytes(section(SectionKind::kAssignment)), "assignment");
  CellAssignment a;
  const auto n = r.get<uint64_t>();
  const auto cells = r.get<uint64_t>();
  const auto p = r.get<uint64_t>();
  std::vector<uint64_t> sizes(cells);
  for (auto& s : sizes) s = r.get<uint64_t>();
  a.cell_of = r.get_array<CellId>(n);
  a.members.resize(cells);
  a.rank_in_cell.resize(n);
  for (uint64_t c = 0; c < cells; ++c) {
    a.members[c] = r.get_array<NodeId>(sizes[c]);
    for (uint32_t rank = 0; rank < a.members[c].size(); ++rank) {
      a.rank_in_cell[a.members[c][rank]] = rank;
    }
  }
  for (uint64_t i = 0; i < p; ++i) a.segment_of.push_back(r.get_array<uint32_t>(n));
  return a;
}

IntraCellGraph IndexFile::read_intra(CellId cell) const {
  const auto& entry = section(SectionKind::kIntra, cell);
  ByteReader r(section_bytes(entry), section_name(SectionKind::kIntra, cell));
  IntraCellGraph g;
  g.cell = cell;
  const auto count = r.get<uint64_t>();
  g.degree = r.get<uint64_t>();
  r.get_array<NodeId>(count);
  if (count % 2 == 1) r.get<uint32_t>();  // alignment padding
  g.adjacency = r.get_array<NodeId>(count * g.degree);
  return g;
}

InterCellEdges IndexFile::read_inter() const {
  ByteReader r(section_bytes(section(SectionKind::kInter)), "inter");
  InterCellEdges e;
  e.num_cells = r.get<uint64_t>();
  e.inter_degree = r.get<uint64_t>();
  e.slots = r.get_array<NodeId>(header_.n * e.num_cells * e.inter_degree);
  return e;
}

std::span<const NodeId> IndexFile::inter_slots(NodeId node) const {
  const auto& entry = section(SectionKind::kInter);
  const size_t per_node = static_cast<size_t>(header_.num_cells) * header_.inter_degree;
  const size_t offset = entry.offset + 16 + static_cast<size_t>(node) * per_node * sizeof(NodeId);
  if (node >= header_.n || offset + per_node * sizeof(NodeId) > entry.offset + entry.size) {
    throw Error("inter slots requested for node " + std::to_string(node) + " out of range");
  }
  return {reinterpret_cast<const NodeId*>(data_ + offset), per_node};
}

ClusterHistogram IndexFile::read_histogram() const {
  ByteReader r(section_bytes(section(SectionKind::kHistogram)), "histogram");
  ClusterHistogram h;
  h.dim = r.get<uint64_t>();
  h.num_clusters = r.get<uint64_t>();
  h.num_cells = r.get<uint64_t>();
  h.top_m = r.get<uint64_t>();
  h.centroids = r.get_array<float>(h.num_clusters * h.dim);
  h.counts = r.get_array<uint32_t>(h.num_cells * h.num_clusters);
  return h;
}

ScalarQuantizer IndexFile::read_quantizer() const {
  ByteReader r(section_bytes(section(SectionKind::kQuantizer)), "quantizer");
  const auto dim = r.get<uint64_t>();
  const auto n = r.get<uint64_t>();
  auto lo = r.get_array<float>(dim);
  auto step = r.get_array<float>(dim);
  auto codes = r.get_array<uint8_t>(n * dim);
  return ScalarQuantizer(dim, std::move(lo), std::move(step), std::move(codes));
}

std::vector<double> IndexFile::read_attributes() const {
  ByteReader r(section_bytes(section(SectionKind::kAttributes)), "attributes");
  const auto n = r.get<uint64_t>();
  const auto m = r.get<uint64_t>();
  return r.get_array<double>(n * m);
}

std::span<const float> IndexFile::vector(NodeId node) const {
  const auto& entry = section(SectionKind::kVectors);
  const size_t offset = entry.offset + 16 + static_cast<size_t>(node) * header_.dim * sizeof(float);
  if (node >= header_.n || offset + header_.dim * sizeof(float) > entry.offset + entry.size) {
    throw Error("vector requested for node " + std::to_string(node) + " out of range");
  }
  return {reinterpret_cast<const float*>(data_ + offset), header_.dim};
}

Dataset IndexFile::read_dataset() const {
  ByteReader r(section_bytes(section(SectionKind::kVectors)), "vectors");
  const auto n = r.get<uint64_t>();
  const auto dim = r.get<uint64_t>();
  auto vectors = r.get_array<float>(n * dim);
  return Dataset(dim, header_.num_attributes, std::move(vectors), read_attributes());
}

BuildParams IndexFile::build_params() const {
  BuildParams p;
  p.intra_degree = header_.intra_degree;
  p.inter_degree = header_.inter_degree;
  p.knn_iterations = header_.knn_iterations;
  p.ef_construction = header_.ef_construction;
  p.rng_seed = header_.seed;
  p.metric = static_cast<Metric>(header_.metric);
  return p;
}

GmgIndex IndexFile::load() const {
  GmgIndex index;
  index.format_version = header_.version;
  index.params = build_params();
  index.grid = read_grid();
  index.assignment = read_assignment();
  index.intra.reserve(header_.num_cells);
  for (CellId c = 0; c < header_.num_cells; ++c) index.intra.push_back(read_intra(c));
  index.inter = read_inter();
  index.histogram = read_histogram();
  index.quantizer = read_quantizer();
  index.data = read_dataset();
  return index;
}

}  // namespace gridvec
