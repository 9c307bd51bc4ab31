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

#include <filesystem>
#include <string>
#include <vector>

#include "gridvec/core.h"

namespace gridvec::io {

// *vecs files: each record is a little-endian int32 dimension followed by
// that many float32 / uint8 / int32 components.
std::vector<float> read_fvecs(const std::filesystem::path& path, size_t* dim);
std::vector<float> read_bvecs(const std::filesystem::path& path, size_t* dim);
std::vector<int32_t> read_ivecs(const std::filesystem::path& path, size_t* dim);

void write_fvecs(const std::filesystem::path& path, std::span<const float> data, size_t dim);
void write_ivecs(const std::filesystem::path& path, std::span<const int32_t> data, size_t dim);

// CSV with header `id,a_1,...,a_m`; rows must cover ids 0..n-1 (any order).
std::vector<double> read_attributes_csv(const std::filesystem::path& path,
                                        size_t* num_attributes);
void write_attributes_csv(const std::filesystem::path& path, const Dataset& dataset);

// Loads vectors (.fvecs or .bvecs, chosen by extension) plus attribute CSV.
Dataset load_dataset(const std::filesystem::path& vectors,
                     const std::filesystem::path& attributes);

// JSON lines: {"q":[...],"filters":[{"attr":i,"low":l,"high":r}],"k":K}
std::vector<RangeQuery> read_queries(const std::filesystem::path& path);
std::string query_to_json(const RangeQuery& query);
void write_queries(const std::filesystem::path& path, std::span<const RangeQuery> queries);

}  // namespace gridvec::io
