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

// Core domain types: item embeddings, pairwise comparison records and the
// preference datasets that bundle them with a user registry.

#ifndef PAL_CORE_DATA_HPP_
#define PAL_CORE_DATA_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace pal {

/// Dense row-major matrix of finite float32 item representations.
class EmbeddingMatrix {
 public:
  /// Validates shape and finiteness; throws ValidationError.
  EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> values);

  /// Single-row matrix from a vector.
  static EmbeddingMatrix from_row(std::span<const float> row);
  /// Rows are the columns of `columns` rounded to float32.
  static EmbeddingMatrix from_columns(const Eigen::MatrixXd& columns);

  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return dim_; }
  std::span<const float> row(std::size_t r) const {
    return {values_.data() + r * dim_, dim_};
  }
  float at(std::size_t r, std::size_t c) const { return values_[r * dim_ + c]; }
  const std::vector<float>& values() const { return values_; }

  /// dim x rows double matrix (one item per column).
  Eigen::MatrixXd to_columns() const;

  bool operator==(const EmbeddingMatrix& other) const;

 private:
  std::size_t rows_;
  std::size_t dim_;
  std::vector<float> values_;
};

/// Accumulates rows before freezing them into an EmbeddingMatrix.
class EmbeddingBuilder {
 public:
  explicit EmbeddingBuilder(std::size_t dim) : dim_(dim) {}

  /// Rounds to float32 and returns the row index.
  std::uint32_t append(const Eigen::VectorXd& row);
  std::uint32_t append(std::span<const float> row);
  std::size_t rows() const { return values_.size() / dim_; }
  std::size_t dim() const { return dim_; }
  EmbeddingMatrix build() &&;

 private:
  std::size_t dim_;
  std::vector<float> values_;
};

enum class UserStatus { kSeen, kUnseen };
enum class Split { kTrain, kVal, kTest };

std::string_view to_string(UserStatus status);
std::string_view to_string(Split split);
UserStatus parse_user_status(std::string_view text);
Split parse_split(std::string_view text);

/// One answer to "left vs right (given context)"; label +1 means left won.
struct ComparisonRecord {
  std::uint64_t id = 0;
  std::string user_id;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  std::optional<std::uint32_t> context;
  int label = 1;
  // Free-form subset tag (e.g. "original" / "filtered_winner").
  std::string tag;

  /// Same comparison with sides exchanged and the label negated.
  ComparisonRecord swapped() const;
};

struct UserEntry {
  std::string id;
  UserStatus status = UserStatus::kSeen;
  std::string group;
};

/// Ordered user registry with O(1) lookup by id.
class UserRegistry {
 public:
  UserRegistry() = default;
  explicit UserRegistry(std::vector<UserEntry> entries);

  /// Throws ValidationError on a duplicate id.
  void add(UserEntry entry);
  const UserEntry* find(std::string_view id) const;
  std::optional<std::size_t> index_of(std::string_view id) const;
  const std::vector<UserEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::vector<std::string> ids() const;
  std::vector<std::string> ids_with_status(UserStatus status) const;

 private:
  std::vector<UserEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct PreferenceDataset {
  EmbeddingMatrix items;
  std::optional<EmbeddingMatrix> contexts;
  std::vector<ComparisonRecord> comparisons;
  UserRegistry users;
  Split split = Split::kTrain;

  /// Checks every dataset invariant; throws ValidationError naming the
  /// offending record.
  void validate() const;

  /// Copy with every record swapped (labels negated, sides exchanged).
  PreferenceDataset flipped() const;

  /// Copy keeping only the records accepted by `keep`; the registry keeps
  /// users that still own at least one record.
  template <typename Pred>
  PreferenceDataset filtered(Pred keep) const {
    PreferenceDataset out{items, contexts, {}, {}, split};
    for (const auto& rec : comparisons)
      if (keep(rec)) out.comparisons.push_back(rec);
    out.users = users_owning(out.comparisons);
    return out;
  }

  /// Registry entries (in registry order) for users that own a record.
  UserRegistry users_owning(const std::vector<ComparisonRecord>& recs) const;
};

}  // namespace pal

#endif  // PAL_CORE_DATA_HPP_
