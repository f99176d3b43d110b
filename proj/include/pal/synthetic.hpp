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

// Gaussian synthetic preference worlds: a random linear map, separated
// prototypes, users placed at (partition) or between (mixture) prototypes
// and noiseless sign-labelled comparisons.

#ifndef PAL_SYNTHETIC_HPP_
#define PAL_SYNTHETIC_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pal/core_data.hpp"
#include "pal/rng.hpp"
#include "pal/vendor_json.hpp"

namespace pal {

enum class UserSetting { kMixture, kPartition };

std::string_view to_string(UserSetting s);
UserSetting parse_user_setting(std::string_view text);

struct SyntheticConfig {
  int d = 16;
  int k_star = 3;
  int n_users = 100;
  int n_per_user = 100;
  // Held-out comparisons per seen user.
  int n_heldout_per_user = 50;
  int n_unseen_users = 0;
  int n_per_unseen_user = 0;
  double delta = 1.0;
  UserSetting setting = UserSetting::kMixture;
  std::uint64_t seed = 0;
  int max_prototype_attempts = 100000;

  void validate() const;
};

struct GroundTruth {
  Eigen::MatrixXd true_map;       // d x d, f*(x) = true_map * x
  Eigen::MatrixXd prototypes;     // d x K*
  Eigen::MatrixXd user_points;    // d x N
  Eigen::MatrixXd user_mixtures;  // K* x N, simplex columns
  std::vector<std::string> user_ids;

  int dim() const { return static_cast<int>(true_map.rows()); }
  std::optional<std::size_t> user_index(std::string_view id) const;
};

Eigen::MatrixXd make_true_map(int d, Rng& rng);

/// Rejection-samples K* columns from N(0, I/d) until every pairwise distance
/// is at least `delta`; throws InfeasibleError after `max_attempts` draws of
/// the whole set.
Eigen::MatrixXd sample_prototypes(int d, int k_star, double delta, Rng& rng,
                                  int max_attempts);

struct SampledUsers {
  Eigen::MatrixXd points;    // d x N
  Eigen::MatrixXd mixtures;  // K* x N
};

/// Partition: user i sits on prototype (first_index + i) mod K*.
/// Mixture: Dirichlet(1) weights, point = prototypes * weights.
SampledUsers sample_users(const Eigen::MatrixXd& prototypes, int n_users,
                          UserSetting setting, Rng& rng, int first_index = 0);

/// Absolute distance-difference below which a pair counts as a tie.
inline constexpr double kTieThreshold = 1e-12;

/// Noiseless label under the ground truth for a user point: +1 iff left is
/// closer after the true map. Returns 0 for a tie.
int true_label(const Eigen::MatrixXd& true_map, const Eigen::VectorXd& user_point,
               const Eigen::VectorXd& left, const Eigen::VectorXd& right);

/// `n_per_user` fresh item pairs per listed user, items ~ N(0, I/d) stored as
/// float32 and labelled on the stored values. User u draws from the stream
/// derive_seed(seed, u). Tied pairs are redrawn; a pair that stays tied for
/// 1000 draws raises InfeasibleError (degenerate world).
PreferenceDataset generate_comparisons(const GroundTruth& truth,
                                       std::span<const std::size_t> users,
                                       int n_per_user, std::uint64_t seed,
                                       UserStatus status, Split split);

/// All users of the ground truth, every one marked seen.
PreferenceDataset generate_comparisons(const GroundTruth& truth, int n_per_user,
                                       std::uint64_t seed);

struct SyntheticWorld {
  GroundTruth truth;
  PreferenceDataset train;
  PreferenceDataset test;
  // Unseen users' comparisons (split test); empty when n_unseen_users == 0.
  std::optional<PreferenceDataset> unseen;
};

/// Draws the full world from `config.seed` with fixed sub-streams for the
/// map, prototypes, users, train, held-out and unseen comparisons.
SyntheticWorld make_synthetic_world(const SyntheticConfig& config);

nlohmann::json ground_truth_to_json(const GroundTruth& truth);
GroundTruth ground_truth_from_json(const nlohmann::json& j);
nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);

}  // namespace pal

#endif  // PAL_SYNTHETIC_HPP_
