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

#include "pal/pale_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "pal/errors.hpp"

namespace pal {
namespace {

constexpr char kMagic[4] = {'P', 'A', 'L', 'E'};

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

std::vector<unsigned char> header(std::uint32_t version, std::uint32_t rows,
                                  std::uint32_t dim) {
  std::vector<unsigned char> out(kMagic, kMagic + 4);
  put_u32(out, version);
  put_u32(out, rows);
  put_u32(out, dim);
  return out;
}

void write_bytes(const std::vector<unsigned char>& bytes,
                 const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()),
           static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("failed writing '" + path.string() + "'");
}

struct RawFile {
  std::uint32_t version;
  std::uint32_t rows;
  std::uint32_t dim;
  std::vector<unsigned char> payload;
};

RawFile read_raw(const std::filesystem::path& path, std::uint32_t expected_version,
                 std::size_t value_bytes) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path.string() + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw FormatError("'" + path.string() + "' is not a PALE file");
  if (bytes.size() < kPaleHeaderBytes)
    throw FormatError("'" + path.string() + "': size mismatch (truncated header)");
  RawFile raw{get_u32(&bytes[4]), get_u32(&bytes[8]), get_u32(&bytes[12]), {}};
  if (raw.version != expected_version)
    throw FormatError("'" + path.string() + "': unsupported PALE version " +
                      std::to_string(raw.version) + " (expected " +
                      std::to_string(expected_version) + ")");
  const std::uint64_t expected = static_cast<std::uint64_t>(raw.rows) * raw.dim *
                                 value_bytes;
  if (bytes.size() - kPaleHeaderBytes != expected)
    throw FormatError("'" + path.string() + "': size mismatch (header declares " +
                      std::to_string(raw.rows) + "x" + std::to_string(raw.dim) +
                      ", payload has " +
                      std::to_string(bytes.size() - kPaleHeaderBytes) + " bytes)");
  raw.payload.assign(bytes.begin() + kPaleHeaderBytes, bytes.end());
  return raw;
}

}  // namespace

void save_embeddings(std::uint32_t rows, std::uint32_t dim,
                     std::span<const float> values,
                     const std::filesystem::path& path) {
  if (static_cast<std::uint64_t>(rows) * dim != values.size())
    throw ValidationError("embedding shape does not match value count");
  for (std::size_t i = 0; i < values.size(); ++i)
    if (!std::isfinite(values[i]))
      throw ValidationError("refusing to write non-finite value at index " +
                            std::to_string(i) + " to '" + path.string() + "'");
  auto bytes = header(kPaleFloat32Version, rows, dim);
  bytes.reserve(bytes.size() + values.size() * 4);
  for (float v : values) put_u32(bytes, std::bit_cast<std::uint32_t>(v));
  write_bytes(bytes, path);
}

void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path) {
  save_embeddings(static_cast<std::uint32_t>(m.rows()),
                  static_cast<std::uint32_t>(m.dim()), m.values(), path);
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  RawFile raw = read_raw(path, kPaleFloat32Version, 4);
  std::vector<float> values(static_cast<std::size_t>(raw.rows) * raw.dim);
  for (std::size_t i = 0; i < values.size(); ++i)
    values[i] = std::bit_cast<float>(get_u32(&raw.payload[4 * i]));
  return EmbeddingMatrix(raw.rows, raw.dim, std::move(values));
}

void save_tensor(const Eigen::MatrixXd& m, const std::filesystem::path& path) {
  if (!m.allFinite())
    throw ValidationError("refusing to write non-finite tensor to '" +
                          path.string() + "'");
  auto bytes = header(kPaleFloat64Version, static_cast<std::uint32_t>(m.rows()),
                      static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      put_u64(bytes, std::bit_cast<std::uint64_t>(m(r, c)));
  write_bytes(bytes, path);
}

Eigen::MatrixXd load_tensor(const std::filesystem::path& path) {
  RawFile raw = read_raw(path, kPaleFloat64Version, 8);
  Eigen::MatrixXd m(raw.rows, raw.dim);
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c, ++i)
      m(r, c) = std::bit_cast<double>(get_u64(&raw.payload[8 * i]));
  return m;
}

}  // namespace pal
