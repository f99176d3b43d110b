// Copyright 2026 The PAL Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// PALE binary matrix files.
//
// Little-endian layout:
//   bytes 0-3    magic "PALE"
//   bytes 4-7    version (u32)
//   bytes 8-11   rows (u32)
//   bytes 12-15  dim (u32)
//   bytes 16-    rows * dim values, row-major
//
// Version 1 stores float32 values and is the embedding format. Version 2
// stores float64 values and is used for model checkpoint tensors so that
// trained parameters reload bit-exactly.

#ifndef PAL_PALE_IO_HPP_
#define PAL_PALE_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <span>

#include <Eigen/Dense>

#include "pal/core_data.hpp"

namespace pal {

inline constexpr std::uint32_t kPaleFloat32Version = 1;
inline constexpr std::uint32_t kPaleFloat64Version = 2;
inline constexpr std::size_t kPaleHeaderBytes = 16;

void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path);

/// Raw form of save_embeddings; rejects non-finite values before touching
/// the filesystem.
void save_embeddings(std::uint32_t rows, std::uint32_t dim,
                     std::span<const float> values,
                     const std::filesystem::path& path);

EmbeddingMatrix load_embeddings(const std::filesystem::path& path);

/// Version-2 tensor I/O. Matrices are written row-major.
void save_tensor(const Eigen::MatrixXd& m, const std::filesystem::path& path);
Eigen::MatrixXd load_tensor(const std::filesystem::path& path);

}  // namespace pal

#endif  // PAL_PALE_IO_HPP_
