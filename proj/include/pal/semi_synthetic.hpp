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

// Heterogeneous datasets built from externally supplied embeddings:
//
//  * persona datasets: yes/no answers to statements, where each synthetic
//    user holds one persona and answers "yes" exactly for that persona's
//    agree statements;
//  * filter datasets: pairwise image preferences whose winner or loser is
//    swapped for a colour-filtered variant so that two user groups disagree
//    systematically.
//
// Gaussian surrogate pools are provided for experiments without real
// embeddings.

#ifndef PAL_SEMI_SYNTHETIC_HPP_
#define PAL_SEMI_SYNTHETIC_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pal/core_data.hpp"
#include "pal/vendor_json.hpp"

namespace pal {

// ---------------------------------------------------------------- personas

struct Persona {
  std::string id;
  std::vector<std::uint32_t> agree;     // statement rows in S(persona)
  std::vector<std::uint32_t> disagree;  // statement rows outside S(persona)
};

/// Statement embeddings are shared; personas index into them. The yes/no
/// answer embeddings are the same for every query.
struct PersonaPool {
  EmbeddingMatrix statements;
  std::vector<float> yes_embedding;
  std::vector<float> no_embedding;
  std::vector<Persona> personas;

  void validate() const;
};

struct PersonaConfig {
  int k_star = 2;          // personas used (the first k_star of the pool)
  int n_seen_users = 10;   // per persona
  int n_unseen_users = 0;  // per persona
  int n_p = 100;           // queries per seen user
  int n_p_unseen = 0;      // queries per unseen user
  // Share of each seen user's queries held out for testing.
  double seen_test_fraction = 0.2;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PersonaBuild {
  PreferenceDataset train;   // seen users
  PreferenceDataset test;    // seen users' held-out queries
  PreferenceDataset unseen;  // unseen users, split test
};

/// Item 0 is "yes", item 1 is "no"; every record is (yes vs no | statement)
/// with label +1 iff the statement is in the user's agree set. A user asks
/// n - n/2 agree and n/2 disagree statements, drawn without replacement.
PersonaBuild build_persona_dataset(const PersonaPool& pool, const PersonaConfig& config);

/// Gaussian surrogate: persona j has `n_agree` statements around its own
/// agree centre and `n_own_disagree` around its own disagree centre; its
/// disagree set is its own disagree statements plus every other persona's
/// agree statements. Centres are `separation` apart on average.
PersonaPool make_gaussian_persona_pool(int n_personas, int n_agree, int n_own_disagree,
                                       int dim, double separation, double spread,
                                       std::uint64_t seed);

void save_persona_pool(const PersonaPool& pool, const std::filesystem::path& manifest);
PersonaPool load_persona_pool(const std::filesystem::path& manifest);

// ------------------------------------------------------------------ filters

/// One preference pair with precomputed filtered variants of both images.
struct FilterRecord {
  std::uint64_t pair_id = 0;
  std::string user;
  Split split = Split::kTrain;
  std::optional<std::uint32_t> context;
  std::uint32_t winner_original = 0;
  std::uint32_t loser_original = 0;
  std::uint32_t winner_blue = 0;
  std::uint32_t winner_red = 0;
  std::uint32_t loser_blue = 0;
  std::uint32_t loser_red = 0;
};

struct FilterTable {
  EmbeddingMatrix items;
  std::optional<EmbeddingMatrix> contexts;
  std::vector<FilterRecord> records;
  // Per-user label counts used for ranking; users absent here are ranked by
  // their record count.
  std::map<std::string, std::size_t> user_labels;

  void validate() const;
};

struct FilterConfig {
  double beta = 0.5;
  int n_seen_users = 50;
  int min_labels = 50;
  std::uint64_t seed = 0;

  void validate() const;
};

inline constexpr const char* kTagOriginal = "original";
inline constexpr const char* kTagFilteredWinner = "filtered_winner";
inline constexpr const char* kTagFilteredLoser = "filtered_loser";

/// counts[group][status][split]; group 0 = G1 (blue wins), 1 = G2 (red wins).
struct FilterSplitTable {
  std::array<std::array<std::array<std::size_t, 3>, 2>, 2> counts{};

  std::size_t at(int group, UserStatus status, Split split) const {
    return counts[group][status == UserStatus::kSeen ? 0 : 1][static_cast<int>(split)];
  }
  std::string to_csv() const;
};

struct FilterBuild {
  PreferenceDataset train;        // seen users, train split
  PreferenceDataset val;          // all users
  PreferenceDataset test;         // all users
  PreferenceDataset unseen_pool;  // unseen users' train-split records (split test)
  FilterSplitTable table;
  // Eligible users in rank order with their group (0 = G1, 1 = G2).
  std::vector<std::pair<std::string, int>> ranking;
};

/// Users with at least min_labels labels are ranked by label count
/// (descending, ties by id) and dealt alternately into G1 and G2; the first
/// n_seen_users ranks are seen. Per user, round(beta * m) records are
/// shortlisted; ceil(half) of them swap in the winning filter on the winner,
/// the rest the losing filter on the loser. Every output record has the
/// winner on the left with label +1.
FilterBuild build_pick_a_filter(const FilterTable& table, const FilterConfig& config);

struct SurrogateFilterConfig {
  int n_users = 40;
  int train_per_user = 100;
  int val_per_user = 10;
  int test_per_user = 40;
  int dim = 16;
  // Strength of the population-wide preference direction relative to noise.
  double shared_signal = 1.0;
  // Norm of the colour shift applied by a filter.
  double filter_strength = 1.0;
  std::uint64_t seed = 0;
};

/// Gaussian images with a shared quality direction; filters add fixed blue
/// and red offsets. Label counts are the per-user record counts.
FilterTable make_surrogate_filter_table(const SurrogateFilterConfig& config);

void save_filter_table(const FilterTable& table, const std::filesystem::path& manifest);
FilterTable load_filter_table(const std::filesystem::path& manifest);

}  // namespace pal

#endif  // PAL_SEMI_SYNTHETIC_HPP_
