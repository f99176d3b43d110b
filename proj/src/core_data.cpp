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

#include "pal/core_data.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>

#include "pal/errors.hpp"

namespace pal {

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim,
                                 std::vector<float> values)
    : rows_(rows), dim_(dim), values_(std::move(values)) {
  if (rows_ == 0 || dim_ == 0)
    throw ValidationError("embedding matrix needs rows >= 1 and dim >= 1");
  if (values_.size() != rows_ * dim_)
    throw ValidationError("embedding matrix holds " +
                          std::to_string(values_.size()) + " values, expected " +
                          std::to_string(rows_ * dim_));
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i]))
      throw ValidationError("non-finite embedding value at row " +
                            std::to_string(i / dim_) + ", column " +
                            std::to_string(i % dim_));
  }
}

EmbeddingMatrix EmbeddingMatrix::from_row(std::span<const float> row) {
  return EmbeddingMatrix(1, row.size(), std::vector<float>(row.begin(), row.end()));
}

EmbeddingMatrix EmbeddingMatrix::from_columns(const Eigen::MatrixXd& columns) {
  std::vector<float> values;
  values.reserve(columns.size());
  for (Eigen::Index c = 0; c < columns.cols(); ++c)
    for (Eigen::Index r = 0; r < columns.rows(); ++r)
      values.push_back(static_cast<float>(columns(r, c)));
  return EmbeddingMatrix(static_cast<std::size_t>(columns.cols()),
                         static_cast<std::size_t>(columns.rows()),
                         std::move(values));
}

Eigen::MatrixXd EmbeddingMatrix::to_columns() const {
  Eigen::MatrixXd out(dim_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < dim_; ++c) out(c, r) = values_[r * dim_ + c];
  return out;
}

bool EmbeddingMatrix::operator==(const EmbeddingMatrix& other) const {
  if (rows_ != other.rows_ || dim_ != other.dim_) return false;
  // Bitwise comparison: -0.0 and 0.0 are distinct payloads.
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (std::signbit(values_[i]) != std::signbit(other.values_[i]) ||
        values_[i] != other.values_[i])
      return false;
  }
  return true;
}

std::uint32_t EmbeddingBuilder::append(const Eigen::VectorXd& row) {
  if (static_cast<std::size_t>(row.size()) != dim_)
    throw ValidationError("row of size " + std::to_string(row.size()) +
                          " appended to dim-" + std::to_string(dim_) + " builder");
  const auto index = static_cast<std::uint32_t>(rows());
  for (Eigen::Index i = 0; i < row.size(); ++i)
    values_.push_back(static_cast<float>(row[i]));
  return index;
}

std::uint32_t EmbeddingBuilder::append(std::span<const float> row) {
  if (row.size() != dim_)
    throw ValidationError("row of size " + std::to_string(row.size()) +
                          " appended to dim-" + std::to_string(dim_) + " builder");
  const auto index = static_cast<std::uint32_t>(rows());
  values_.insert(values_.end(), row.begin(), row.end());
  return index;
}

EmbeddingMatrix EmbeddingBuilder::build() && {
  const std::size_t n = rows();
  return EmbeddingMatrix(n, dim_, std::move(values_));
}

std::string_view to_string(UserStatus status) {
  return status == UserStatus::kSeen ? "seen" : "unseen";
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

UserStatus parse_user_status(std::string_view text) {
  if (text == "seen") return UserStatus::kSeen;
  if (text == "unseen") return UserStatus::kUnseen;
  throw ValidationError("unknown user status '" + std::string(text) + "'");
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "val") return Split::kVal;
  if (text == "test") return Split::kTest;
  throw ValidationError("unknown split '" + std::string(text) + "'");
}

ComparisonRecord ComparisonRecord::swapped() const {
  ComparisonRecord out = *this;
  std::swap(out.left, out.right);
  out.label = -label;
  return out;
}

UserRegistry::UserRegistry(std::vector<UserEntry> entries) {
  for (auto& e : entries) add(std::move(e));
}

void UserRegistry::add(UserEntry entry) {
  if (index_.count(entry.id))
    throw ValidationError("duplicate user id '" + entry.id + "'");
  index_.emplace(entry.id, entries_.size());
  entries_.push_back(std::move(entry));
}

const UserEntry* UserRegistry::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &entries_[it->second];
}

std::optional<std::size_t> UserRegistry::index_of(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> UserRegistry::ids() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.id);
  return out;
}

std::vector<std::string> UserRegistry::ids_with_status(UserStatus status) const {
  std::vector<std::string> out;
  for (const auto& e : entries_)
    if (e.status == status) out.push_back(e.id);
  return out;
}

namespace {

std::string describe(std::size_t index, const ComparisonRecord& rec) {
  std::ostringstream os;
  os << "comparison #" << index << " (id " << rec.id << ", user '"
     << rec.user_id << "')";
  return os.str();
}

}  // namespace

void PreferenceDataset::validate() const {
  std::unordered_set<std::uint64_t> seen_ids;
  seen_ids.reserve(comparisons.size());
  for (std::size_t i = 0; i < comparisons.size(); ++i) {
    const auto& rec = comparisons[i];
    if (!seen_ids.insert(rec.id).second)
      throw ValidationError(describe(i, rec) + ": duplicate comparison id");
    if (rec.left >= items.rows() || rec.right >= items.rows())
      throw ValidationError(describe(i, rec) + ": item index out of range (rows = " +
                            std::to_string(items.rows()) + ")");
    if (rec.left == rec.right)
      throw ValidationError(describe(i, rec) + ": left_item equals right_item");
    if (rec.label != 1 && rec.label != -1)
      throw ValidationError(describe(i, rec) + ": label must be +1 or -1");
    if (rec.context) {
      if (!contexts)
        throw ValidationError(describe(i, rec) +
                              ": context index given but dataset has no contexts");
      if (*rec.context >= contexts->rows())
        throw ValidationError(describe(i, rec) +
                              ": context index out of range (rows = " +
                              std::to_string(contexts->rows()) + ")");
    }
    const UserEntry* user = users.find(rec.user_id);
    if (user == nullptr)
      throw ValidationError(describe(i, rec) + ": unknown user");
    if (split == Split::kTrain && user->status == UserStatus::kUnseen)
      throw ValidationError(describe(i, rec) +
                            ": unseen user contributes to a train split");
  }
}

PreferenceDataset PreferenceDataset::flipped() const {
  PreferenceDataset out = *this;
  for (auto& rec : out.comparisons) rec = rec.swapped();
  return out;
}

UserRegistry PreferenceDataset::users_owning(
    const std::vector<ComparisonRecord>& recs) const {
  std::unordered_set<std::string> owners;
  for (const auto& rec : recs) owners.insert(rec.user_id);
  UserRegistry out;
  for (const auto& e : users.entries())
    if (owners.count(e.id)) out.add(e);
  return out;
}

}  // namespace pal
