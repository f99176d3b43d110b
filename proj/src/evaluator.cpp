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

#include "pal/evaluator.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "pal/errors.hpp"
#include "pal/trainer.hpp"

namespace pal {
namespace {

constexpr std::uint64_t kStreamLocalizeSplit = 21;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

WeightSource WeightSource::table() { return WeightSource(); }

WeightSource WeightSource::fixed(Eigen::VectorXd w) {
  WeightSource s;
  s.kind_ = Kind::kFixed;
  s.fixed_ = std::move(w);
  return s;
}

WeightSource WeightSource::per_user(std::map<std::string, Eigen::VectorXd> weights) {
  WeightSource s;
  s.kind_ = Kind::kPerUser;
  s.per_user_ = std::move(weights);
  return s;
}

Eigen::VectorXd WeightSource::lookup(const PalModel& model,
                                     const std::string& user) const {
  switch (kind_) {
    case Kind::kFixed:
      return fixed_;
    case Kind::kPerUser: {
      auto it = per_user_.find(user);
      if (it == per_user_.end())
        throw ValidationError("no weights supplied for user '" + user + "'");
      return it->second;
    }
    case Kind::kTable:
      break;
  }
  const auto col = model.weights.column_of(user);
  if (!col) throw ValidationError("user '" + user + "' has no weight column");
  return model.weights.matrix().col(*col);
}

AccuracyTally score_records(const PalModel& model, const PreferenceDataset& ds,
                            std::span<const ComparisonRecord> records,
                            const WeightSource& source) {
  return score_records(model, EmbeddingCache(ds), records, source);
}

AccuracyTally score_records(const PalModel& model, const EmbeddingCache& cache,
                            std::span<const ComparisonRecord> records,
                            const WeightSource& source) {
  AccuracyTally tally;
  std::unordered_map<std::string, Eigen::VectorXd> weights;
  for (const auto& rec : records) {
    auto it = weights.find(rec.user_id);
    if (it == weights.end())
      it = weights.emplace(rec.user_id, source.lookup(model, rec.user_id)).first;
    const double m =
        rec.label * margin_for_weights(model, it->second, cache.inputs(rec), Mode::kEval);
    tally.correct += m > 0.0 ? 1.0 : (m == 0.0 ? 0.5 : 0.0);
    ++tally.count;
  }
  return tally;
}

double accuracy(const PalModel& model, const PreferenceDataset& ds,
                const WeightSource& source) {
  if (ds.comparisons.empty()) throw ValidationError("accuracy of an empty dataset");
  return score_records(model, ds, ds.comparisons, source).fraction();
}

UnseenResult evaluate_unseen(const PalModel& model, const PreferenceDataset& unseen,
                             int n_loc, const TrainConfig& config) {
  if (n_loc < 0) throw ConfigError("n_loc must be >= 0");
  std::map<std::string, std::vector<std::size_t>> by_user;
  for (std::size_t i = 0; i < unseen.comparisons.size(); ++i)
    by_user[unseen.comparisons[i].user_id].push_back(i);

  UnseenResult result;
  AccuracyTally total;
  const EmbeddingCache cache(unseen);
  const Eigen::VectorXd zero_shot = zero_shot_weights(model.weights);
  const auto& entries = unseen.users.entries();
  for (std::size_t u = 0; u < entries.size(); ++u) {
    const auto& user = entries[u];
    if (user.status != UserStatus::kUnseen)
      throw ValidationError("evaluate_unseen given seen user '" + user.id + "'");
    auto it = by_user.find(user.id);
    if (it == by_user.end()) continue;
    std::vector<std::size_t> idx = it->second;
    std::vector<ComparisonRecord> loc, eval;
    Eigen::VectorXd w;
    if (n_loc == 0) {
      w = zero_shot;
      for (std::size_t i : idx) eval.push_back(unseen.comparisons[i]);
    } else {
      if (idx.size() < 2) {
        result.skipped_users.push_back(user.id);
        continue;
      }
      // Prefix of one fixed permutation per user, so larger n_loc extends
      // the smaller localization sets.
      Rng split_rng(derive_seed(derive_seed(config.seed, kStreamLocalizeSplit), u));
      split_rng.shuffle(idx);
      const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(n_loc),
                                                  idx.size() - 1);
      for (std::size_t j = 0; j < idx.size(); ++j)
        (j < n ? loc : eval).push_back(unseen.comparisons[idx[j]]);
      TrainConfig local = config;
      local.seed = derive_seed(config.seed, u);
      LocalizeResult fit = localize_user(model, cache, loc, local);
      result.max_weight_sum_error =
          std::max(result.max_weight_sum_error, fit.history.max_weight_sum_error);
      result.min_weight_entry = std::min(result.min_weight_entry, fit.history.min_weight_entry);
      w = std::move(fit.weights);
    }
    for (const auto& r : loc) result.localization_ids.push_back(r.id);
    for (const auto& r : eval) result.scored_ids.push_back(r.id);
    total.add(score_records(model, cache, eval, WeightSource::fixed(w)));
    result.weights.emplace(user.id, std::move(w));
  }
  if (total.count == 0) throw ValidationError("no unseen records left to score");
  result.accuracy = total.fraction();
  result.records_scored = total.count;
  return result;
}

std::map<std::string, SubsetCell> subset_breakdown(const PalModel& model,
                                                   const PreferenceDataset& ds,
                                                   const WeightSource& source,
                                                   const TagFn& tag_fn) {
  std::map<std::string, std::vector<ComparisonRecord>> groups;
  for (const auto& rec : ds.comparisons) groups[tag_fn(rec)].push_back(rec);
  std::map<std::string, SubsetCell> out;
  const EmbeddingCache cache(ds);
  for (const auto& [tag, recs] : groups) {
    const AccuracyTally t = score_records(model, cache, recs, source);
    out[tag] = {t.fraction(), t.count};
  }
  return out;
}

std::map<std::string, SubsetCell> group_breakdown(const PalModel& model,
                                                  const PreferenceDataset& ds,
                                                  const WeightSource& source) {
  return subset_breakdown(model, ds, source, [&](const ComparisonRecord& rec) {
    const UserEntry* u = ds.users.find(rec.user_id);
    return u == nullptr || u->group.empty() ? std::string("ungrouped") : u->group;
  });
}

AlignmentDiagnostics alignment_diagnostics(const PalModel& model,
                                           const GroundTruth& truth) {
  if (model.variant != Variant::kA)
    throw ConfigError("alignment diagnostics are defined for Model A only");
  if (model.prototypes.rows() != truth.prototypes.rows())
    throw ShapeError("learned and true prototypes live in different spaces");
  const int k = static_cast<int>(model.prototypes.cols());
  const int k_true = static_cast<int>(truth.prototypes.cols());
  if (std::max(k, k_true) > kMaxExhaustiveMatching)
    throw ConfigError("exhaustive prototype matching supports at most " +
                      std::to_string(kMaxExhaustiveMatching) +
                      " prototypes; subsample prototypes first");
  auto mapped = [&](const Eigen::VectorXd& x) { return mlp_forward(model.f, x, Mode::kEval); };
  std::vector<Eigen::VectorXd> learned, target;
  for (int i = 0; i < k; ++i) learned.push_back(mapped(model.prototypes.col(i)));
  for (int j = 0; j < k_true; ++j) target.push_back(mapped(truth.prototypes.col(j)));
  Eigen::MatrixXd cost(k, k_true);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k_true; ++j) cost(i, j) = (learned[i] - target[j]).norm();

  // Enumerate injective maps from the smaller side into the larger one.
  const int small = std::min(k, k_true);
  const int large = std::max(k, k_true);
  std::vector<int> perm(large);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> best_perm;
  do {
    double c = 0.0;
    for (int i = 0; i < small; ++i)
      c += k <= k_true ? cost(i, perm[i]) : cost(perm[i], i);
    if (c < best) {
      best = c;
      best_perm.assign(perm.begin(), perm.begin() + small);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  AlignmentDiagnostics diag;
  diag.prototype_match_cost = best / small;
  diag.matching.assign(k, -1);
  for (int i = 0; i < small; ++i) {
    if (k <= k_true)
      diag.matching[i] = best_perm[i];
    else
      diag.matching[best_perm[i]] = i;
  }
  double err = 0.0;
  int counted = 0;
  for (std::size_t u = 0; u < truth.user_ids.size(); ++u) {
    const auto col = model.weights.column_of(truth.user_ids[u]);
    if (!col) continue;
    const Eigen::VectorXd predicted =
        mapped(ideal_point_a(model.prototypes, model.weights.matrix().col(*col)));
    err += (predicted - mapped(truth.user_points.col(static_cast<Eigen::Index>(u)))).norm();
    ++counted;
  }
  diag.user_point_error = counted == 0 ? 0.0 : err / counted;
  return diag;
}

nlohmann::json EvalReport::to_json() const {
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  auto cells = [](const std::map<std::string, SubsetCell>& m) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, c] : m) j[k] = {{"accuracy", c.accuracy}, {"n_records", c.count}};
    return j;
  };
  return {{"seen_accuracy", opt(seen_accuracy)},
          {"unseen_accuracy", opt(unseen_accuracy)},
          {"zero_shot_accuracy", opt(zero_shot_accuracy)},
          {"n_records",
           {{"seen", seen_records}, {"unseen", unseen_records}, {"zero_shot", zero_shot_records}}},
          {"per_group", cells(per_group)},
          {"per_subset", cells(per_subset)}};
}

std::string EvalReport::to_csv() const {
  std::ostringstream os;
  os << "section,cell,accuracy,n_records\n";
  auto row = [&](const std::string& section, const std::string& cell,
                 const std::optional<double>& acc, std::size_t n) {
    if (acc) os << section << ',' << cell << ',' << fmt17(*acc) << ',' << n << '\n';
  };
  row("overall", "seen", seen_accuracy, seen_records);
  row("overall", "unseen", unseen_accuracy, unseen_records);
  row("overall", "zero_shot", zero_shot_accuracy, zero_shot_records);
  for (const auto& [k, c] : per_group) row("group", k, c.accuracy, c.count);
  for (const auto& [k, c] : per_subset) row("subset", k, c.accuracy, c.count);
  return os.str();
}

}  // namespace pal
