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

#include "pal/synthetic.hpp"

#include <cmath>

#include "pal/errors.hpp"

namespace pal {
namespace {

constexpr std::uint64_t kStreamMap = 1;
constexpr std::uint64_t kStreamPrototypes = 2;
constexpr std::uint64_t kStreamUsers = 3;
constexpr std::uint64_t kStreamTrain = 4;
constexpr std::uint64_t kStreamHeldout = 5;
constexpr std::uint64_t kStreamUnseenUsers = 6;
constexpr std::uint64_t kStreamUnseen = 7;

constexpr int kTieRedrawBudget = 1000;

Eigen::VectorXd draw_item(int d, Rng& rng) {
  const double stddev = 1.0 / std::sqrt(static_cast<double>(d));
  Eigen::VectorXd x(d);
  // Round through float32 so labels are computed on the stored payload.
  for (int i = 0; i < d; ++i) x[i] = static_cast<float>(rng.normal(0.0, stddev));
  return x;
}

std::string user_name(std::size_t index) { return "u" + std::to_string(index); }

}  // namespace

std::string_view to_string(UserSetting s) {
  return s == UserSetting::kMixture ? "mixture" : "partition";
}

UserSetting parse_user_setting(std::string_view text) {
  if (text == "mixture") return UserSetting::kMixture;
  if (text == "partition") return UserSetting::kPartition;
  throw ConfigError("unknown user setting '" + std::string(text) + "'");
}

void SyntheticConfig::validate() const {
  if (d < 1) throw ConfigError("synthetic d must be >= 1");
  if (k_star < 1) throw ConfigError("synthetic k_star must be >= 1");
  if (n_users < 1) throw ConfigError("synthetic n_users must be >= 1");
  if (n_per_user < 1) throw ConfigError("synthetic n_per_user must be >= 1");
  if (n_heldout_per_user < 0 || n_unseen_users < 0 || n_per_unseen_user < 0)
    throw ConfigError("synthetic counts must be nonnegative");
  if (!(delta >= 0.0)) throw ConfigError("synthetic delta must be >= 0");
  if (max_prototype_attempts < 1)
    throw ConfigError("max_prototype_attempts must be >= 1");
}

std::optional<std::size_t> GroundTruth::user_index(std::string_view id) const {
  for (std::size_t i = 0; i < user_ids.size(); ++i)
    if (user_ids[i] == id) return i;
  return std::nullopt;
}

Eigen::MatrixXd make_true_map(int d, Rng& rng) {
  if (d < 1) throw ConfigError("true map dimension must be >= 1");
  Eigen::MatrixXd w(d, d);
  for (int c = 0; c < d; ++c)
    for (int r = 0; r < d; ++r) w(r, c) = rng.normal();
  return w;
}

Eigen::MatrixXd sample_prototypes(int d, int k_star, double delta, Rng& rng,
                                  int max_attempts) {
  if (!(delta >= 0.0)) throw ConfigError("delta must be >= 0");
  const double stddev = 1.0 / std::sqrt(static_cast<double>(d));
  Eigen::MatrixXd p(d, k_star);
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    for (int k = 0; k < k_star; ++k)
      for (int r = 0; r < d; ++r) p(r, k) = rng.normal(0.0, stddev);
    bool ok = true;
    for (int i = 0; i < k_star && ok; ++i)
      for (int j = i + 1; j < k_star && ok; ++j)
        ok = (p.col(i) - p.col(j)).norm() >= delta;
    if (ok) return p;
  }
  throw InfeasibleError("prototype separation " + std::to_string(delta) +
                        " not met after " + std::to_string(max_attempts) +
                        " attempts (d = " + std::to_string(d) + ", K* = " +
                        std::to_string(k_star) + ")");
}

SampledUsers sample_users(const Eigen::MatrixXd& prototypes, int n_users,
                          UserSetting setting, Rng& rng, int first_index) {
  const auto k_star = prototypes.cols();
  SampledUsers out{Eigen::MatrixXd(prototypes.rows(), n_users),
                   Eigen::MatrixXd::Zero(k_star, n_users)};
  for (int i = 0; i < n_users; ++i) {
    if (setting == UserSetting::kPartition) {
      const auto k = (first_index + i) % k_star;
      out.mixtures(k, i) = 1.0;
      out.points.col(i) = prototypes.col(k);
    } else {
      const auto w = rng.dirichlet_uniform(static_cast<std::size_t>(k_star));
      for (Eigen::Index k = 0; k < k_star; ++k) out.mixtures(k, i) = w[k];
      out.points.col(i) = prototypes * out.mixtures.col(i);
    }
  }
  return out;
}

int true_label(const Eigen::MatrixXd& true_map, const Eigen::VectorXd& user_point,
               const Eigen::VectorXd& left, const Eigen::VectorXd& right) {
  const Eigen::VectorXd fa = true_map * user_point;
  const double dl = (true_map * left - fa).norm();
  const double dr = (true_map * right - fa).norm();
  if (std::abs(dl - dr) < kTieThreshold) return 0;
  return dl < dr ? 1 : -1;
}

PreferenceDataset generate_comparisons(const GroundTruth& truth,
                                       std::span<const std::size_t> users,
                                       int n_per_user, std::uint64_t seed,
                                       UserStatus status, Split split) {
  const int d = truth.dim();
  EmbeddingBuilder items(static_cast<std::size_t>(d));
  std::vector<ComparisonRecord> comps;
  comps.reserve(users.size() * static_cast<std::size_t>(n_per_user));
  UserRegistry registry;
  std::uint64_t next_id = 0;
  for (std::size_t u : users) {
    registry.add({truth.user_ids[u], status, {}});
    Rng rng(derive_seed(seed, u));
    const Eigen::VectorXd point = truth.user_points.col(static_cast<Eigen::Index>(u));
    for (int j = 0; j < n_per_user; ++j) {
      int label = 0;
      Eigen::VectorXd left, right;
      for (int attempt = 0; attempt < kTieRedrawBudget && label == 0; ++attempt) {
        left = draw_item(d, rng);
        right = draw_item(d, rng);
        label = true_label(truth.true_map, point, left, right);
      }
      if (label == 0)
        throw InfeasibleError("degenerate world: pair for user '" +
                              truth.user_ids[u] + "' stayed tied after " +
                              std::to_string(kTieRedrawBudget) + " draws");
      ComparisonRecord rec;
      rec.id = next_id++;
      rec.user_id = truth.user_ids[u];
      rec.left = items.append(left);
      rec.right = items.append(right);
      rec.label = label;
      comps.push_back(std::move(rec));
    }
  }
  if (items.rows() == 0) items.append(Eigen::VectorXd::Zero(d));
  PreferenceDataset ds{std::move(items).build(), std::nullopt, std::move(comps),
                       std::move(registry), split};
  ds.validate();
  return ds;
}

PreferenceDataset generate_comparisons(const GroundTruth& truth, int n_per_user,
                                       std::uint64_t seed) {
  std::vector<std::size_t> all(truth.user_ids.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return generate_comparisons(truth, all, n_per_user, seed, UserStatus::kSeen,
                              Split::kTrain);
}

SyntheticWorld make_synthetic_world(const SyntheticConfig& config) {
  config.validate();
  GroundTruth truth;
  {
    Rng rng(derive_seed(config.seed, kStreamMap));
    truth.true_map = make_true_map(config.d, rng);
  }
  {
    Rng rng(derive_seed(config.seed, kStreamPrototypes));
    truth.prototypes = sample_prototypes(config.d, config.k_star, config.delta, rng,
                                         config.max_prototype_attempts);
  }
  const int n_total = config.n_users + config.n_unseen_users;
  truth.user_points.resize(config.d, n_total);
  truth.user_mixtures.resize(config.k_star, n_total);
  {
    Rng rng(derive_seed(config.seed, kStreamUsers));
    auto seen = sample_users(truth.prototypes, config.n_users, config.setting, rng);
    truth.user_points.leftCols(config.n_users) = seen.points;
    truth.user_mixtures.leftCols(config.n_users) = seen.mixtures;
  }
  if (config.n_unseen_users > 0) {
    Rng rng(derive_seed(config.seed, kStreamUnseenUsers));
    auto unseen = sample_users(truth.prototypes, config.n_unseen_users,
                               config.setting, rng, config.n_users);
    truth.user_points.rightCols(config.n_unseen_users) = unseen.points;
    truth.user_mixtures.rightCols(config.n_unseen_users) = unseen.mixtures;
  }
  for (int i = 0; i < n_total; ++i) truth.user_ids.push_back(user_name(i));

  std::vector<std::size_t> seen_idx(config.n_users), unseen_idx(config.n_unseen_users);
  for (int i = 0; i < config.n_users; ++i) seen_idx[i] = i;
  for (int i = 0; i < config.n_unseen_users; ++i) unseen_idx[i] = config.n_users + i;

  PreferenceDataset train = generate_comparisons(
      truth, seen_idx, config.n_per_user, derive_seed(config.seed, kStreamTrain),
      UserStatus::kSeen, Split::kTrain);
  PreferenceDataset test = generate_comparisons(
      truth, seen_idx, config.n_heldout_per_user,
      derive_seed(config.seed, kStreamHeldout), UserStatus::kSeen, Split::kTest);
  std::optional<PreferenceDataset> unseen;
  if (config.n_unseen_users > 0)
    unseen = generate_comparisons(truth, unseen_idx, config.n_per_unseen_user,
                                  derive_seed(config.seed, kStreamUnseen),
                                  UserStatus::kUnseen, Split::kTest);
  return {std::move(truth), std::move(train), std::move(test), std::move(unseen)};
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows == 0 ? 0 : static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (static_cast<Eigen::Index>(j[r].size()) != cols)
      throw FormatError("ragged matrix in JSON");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

nlohmann::json ground_truth_to_json(const GroundTruth& truth) {
  return {{"true_map", matrix_to_json(truth.true_map)},
          {"prototypes", matrix_to_json(truth.prototypes)},
          {"user_points", matrix_to_json(truth.user_points)},
          {"user_mixtures", matrix_to_json(truth.user_mixtures)},
          {"user_ids", truth.user_ids}};
}

GroundTruth ground_truth_from_json(const nlohmann::json& j) {
  GroundTruth t;
  t.true_map = matrix_from_json(j.at("true_map"));
  t.prototypes = matrix_from_json(j.at("prototypes"));
  t.user_points = matrix_from_json(j.at("user_points"));
  t.user_mixtures = matrix_from_json(j.at("user_mixtures"));
  t.user_ids = j.at("user_ids").get<std::vector<std::string>>();
  return t;
}

}  // namespace pal
