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

// Accuracy metrics, seen/unseen/zero-shot protocols, subset breakdowns and
// prototype-recovery diagnostics.

#ifndef PAL_EVALUATOR_HPP_
#define PAL_EVALUATOR_HPP_

#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pal/core_data.hpp"
#include "pal/model.hpp"
#include "pal/synthetic.hpp"
#include "pal/vendor_json.hpp"

namespace pal {

struct TrainConfig;

/// Where the per-user weight vector comes from when scoring a record.
class WeightSource {
 public:
  /// The model's own weight table; unregistered users are an error.
  static WeightSource table();
  /// The same vector for every user (e.g. zero-shot weights).
  static WeightSource fixed(Eigen::VectorXd w);
  /// Explicit per-user vectors.
  static WeightSource per_user(std::map<std::string, Eigen::VectorXd> weights);

  Eigen::VectorXd lookup(const PalModel& model, const std::string& user) const;

 private:
  enum class Kind { kTable, kFixed, kPerUser };
  Kind kind_ = Kind::kTable;
  Eigen::VectorXd fixed_;
  std::map<std::string, Eigen::VectorXd> per_user_;
};

/// Correct count with ties (margin exactly 0) worth one half.
struct AccuracyTally {
  double correct = 0.0;
  std::size_t count = 0;

  double fraction() const { return count == 0 ? 0.0 : correct / count; }
  void add(const AccuracyTally& o) {
    correct += o.correct;
    count += o.count;
  }
};

/// Eval-mode scoring of `records`, whose embeddings live in `ds`.
AccuracyTally score_records(const PalModel& model, const PreferenceDataset& ds,
                            std::span<const ComparisonRecord> records,
                            const WeightSource& source);
AccuracyTally score_records(const PalModel& model, const EmbeddingCache& cache,
                            std::span<const ComparisonRecord> records,
                            const WeightSource& source);

/// Fraction of records whose label-canonicalized margin is positive.
/// Throws ValidationError on an empty dataset.
double accuracy(const PalModel& model, const PreferenceDataset& ds,
                const WeightSource& source);

struct UnseenResult {
  double accuracy = 0.0;
  std::size_t records_scored = 0;
  std::map<std::string, Eigen::VectorXd> weights;
  std::vector<std::string> skipped_users;
  // Ids of records consumed by localization (never scored).
  std::vector<std::uint64_t> localization_ids;
  std::vector<std::uint64_t> scored_ids;
  // Worst simplex violation over every localization step.
  double max_weight_sum_error = 0.0;
  double min_weight_entry = std::numeric_limits<double>::infinity();
};

/// Per unseen user: a seeded split into min(n_loc, m - 1) localization
/// records and an evaluation remainder; weights localized on the former,
/// accuracy scored on the latter; record-weighted mean over users.
/// n_loc == 0 scores every record under zero-shot weights.
UnseenResult evaluate_unseen(const PalModel& model, const PreferenceDataset& unseen,
                             int n_loc, const TrainConfig& config);

struct SubsetCell {
  double accuracy = 0.0;
  std::size_t count = 0;
};

using TagFn = std::function<std::string(const ComparisonRecord&)>;

std::map<std::string, SubsetCell> subset_breakdown(const PalModel& model,
                                                   const PreferenceDataset& ds,
                                                   const WeightSource& source,
                                                   const TagFn& tag_fn);

/// Groups records by the owning user's registry group.
std::map<std::string, SubsetCell> group_breakdown(const PalModel& model,
                                                  const PreferenceDataset& ds,
                                                  const WeightSource& source);

struct AlignmentDiagnostics {
  double prototype_match_cost = 0.0;
  double user_point_error = 0.0;
  // matching[i] = true prototype matched to learned prototype i (-1 if none).
  std::vector<int> matching;
};

inline constexpr int kMaxExhaustiveMatching = 8;

/// Model A only. Learned and true prototypes are both mapped through the
/// learned f and matched one-to-one by exhaustive search (max(K, K*) <= 8).
AlignmentDiagnostics alignment_diagnostics(const PalModel& model,
                                           const GroundTruth& truth);

struct EvalReport {
  std::optional<double> seen_accuracy;
  std::optional<double> unseen_accuracy;
  std::optional<double> zero_shot_accuracy;
  std::size_t seen_records = 0;
  std::size_t unseen_records = 0;
  std::size_t zero_shot_records = 0;
  std::map<std::string, SubsetCell> per_group;
  std::map<std::string, SubsetCell> per_subset;

  nlohmann::json to_json() const;
  /// One row per cell: section,cell,accuracy,n_records.
  std::string to_csv() const;
};

}  // namespace pal

#endif  // PAL_EVALUATOR_HPP_
