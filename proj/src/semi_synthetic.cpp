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

#include "pal/semi_synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <unordered_map>

#include "pal/dataset_io.hpp"
#include "pal/errors.hpp"
#include "pal/pale_io.hpp"
#include "pal/rng.hpp"

namespace pal {
namespace {

using nlohmann::json;

// First `count` entries of `pool` after a partial Fisher-Yates shuffle.
std::vector<std::uint32_t> choose(const std::vector<std::uint32_t>& pool, std::size_t count,
                                  Rng& rng) {
  std::vector<std::uint32_t> v = pool;
  for (std::size_t t = 0; t < count; ++t) {
    const std::size_t j = t + static_cast<std::size_t>(rng.below(v.size() - t));
    std::swap(v[t], v[j]);
  }
  v.resize(count);
  return v;
}

Eigen::VectorXd gaussian(int dim, double sd, Rng& rng) {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = rng.normal(0.0, sd);
  return v;
}

Eigen::VectorXd unit(int dim, Rng& rng) {
  Eigen::VectorXd v = gaussian(dim, 1.0, rng);
  return v / v.norm();
}

EmbeddingMatrix answers_matrix(const PersonaPool& pool) {
  std::vector<float> v = pool.yes_embedding;
  v.insert(v.end(), pool.no_embedding.begin(), pool.no_embedding.end());
  return EmbeddingMatrix(2, pool.yes_embedding.size(), std::move(v));
}

std::vector<std::uint32_t> index_list(const json& j) {
  return j.get<std::vector<std::uint32_t>>();
}

}  // namespace

// ---------------------------------------------------------------- personas

void PersonaPool::validate() const {
  if (yes_embedding.empty() || yes_embedding.size() != no_embedding.size())
    throw ValidationError("persona pool: yes/no embeddings must be non-empty and equal length");
  for (float x : yes_embedding)
    if (!std::isfinite(x)) throw ValidationError("persona pool: non-finite yes embedding");
  for (float x : no_embedding)
    if (!std::isfinite(x)) throw ValidationError("persona pool: non-finite no embedding");
  if (personas.empty()) throw ValidationError("persona pool: no personas");
  std::set<std::string> ids;
  for (const auto& p : personas) {
    if (!ids.insert(p.id).second)
      throw ValidationError("persona pool: duplicate persona '" + p.id + "'");
    if (p.agree.empty() || p.disagree.empty())
      throw ValidationError("persona '" + p.id + "' needs at least one agree and one disagree statement");
    std::set<std::uint32_t> agree(p.agree.begin(), p.agree.end());
    if (agree.size() != p.agree.size())
      throw ValidationError("persona '" + p.id + "': repeated agree statement");
    std::set<std::uint32_t> disagree(p.disagree.begin(), p.disagree.end());
    if (disagree.size() != p.disagree.size())
      throw ValidationError("persona '" + p.id + "': repeated disagree statement");
    for (auto s : p.agree) {
      if (s >= statements.rows())
        throw ValidationError("persona '" + p.id + "': statement index out of range");
      if (disagree.count(s))
        throw ValidationError("persona '" + p.id + "': statement " + std::to_string(s) +
                              " is both agree and disagree");
    }
    for (auto s : p.disagree)
      if (s >= statements.rows())
        throw ValidationError("persona '" + p.id + "': statement index out of range");
  }
}

void PersonaConfig::validate() const {
  if (k_star < 1) throw ConfigError("k_star must be >= 1");
  if (n_seen_users < 1) throw ConfigError("n_seen_users must be >= 1");
  if (n_unseen_users < 0 || n_p_unseen < 0)
    throw ConfigError("unseen user counts must be >= 0");
  if (n_p < 1) throw ConfigError("n_p must be >= 1");
  if (!(seen_test_fraction >= 0.0 && seen_test_fraction < 1.0))
    throw ConfigError("seen_test_fraction must be in [0, 1)");
  if (std::lround(seen_test_fraction * n_p) >= n_p)
    throw ConfigError("seen_test_fraction leaves no training queries");
}

PersonaBuild build_persona_dataset(const PersonaPool& pool, const PersonaConfig& config) {
  config.validate();
  pool.validate();
  if (static_cast<std::size_t>(config.k_star) > pool.personas.size())
    throw ConfigError("k_star = " + std::to_string(config.k_star) + " exceeds the " +
                      std::to_string(pool.personas.size()) + " personas in the pool");

  const EmbeddingMatrix items = answers_matrix(pool);
  PersonaBuild out{{items, pool.statements, {}, {}, Split::kTrain},
                   {items, pool.statements, {}, {}, Split::kTest},
                   {items, pool.statements, {}, {}, Split::kTest}};

  auto queries = [&](const Persona& p, int n, Rng& rng, const std::string& user) {
    const std::size_t n_dis = static_cast<std::size_t>(n) / 2;
    const std::size_t n_ag = static_cast<std::size_t>(n) - n_dis;
    if (n_ag > p.agree.size() || n_dis > p.disagree.size())
      throw ConfigError("persona '" + p.id + "' has too few statements for " +
                        std::to_string(n) + " queries per user");
    std::vector<ComparisonRecord> recs;
    for (auto s : choose(p.agree, n_ag, rng))
      recs.push_back({0, user, 0, 1, s, +1, ""});
    for (auto s : choose(p.disagree, n_dis, rng))
      recs.push_back({0, user, 0, 1, s, -1, ""});
    rng.shuffle(recs);
    return recs;
  };

  auto push = [](PreferenceDataset& ds, ComparisonRecord rec) {
    rec.id = ds.comparisons.size();
    ds.comparisons.push_back(std::move(rec));
  };

  const int k = config.k_star;
  const auto n_test = static_cast<std::size_t>(std::lround(config.seen_test_fraction * config.n_p));
  for (int j = 0; j < k; ++j) {
    const Persona& p = pool.personas[j];
    for (int i = 0; i < config.n_seen_users; ++i) {
      const std::string id = p.id + "_s" + std::to_string(i);
      UserEntry entry{id, UserStatus::kSeen, p.id};
      out.train.users.add(entry);
      if (n_test > 0) out.test.users.add(entry);
      Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(j) * config.n_seen_users + i));
      auto recs = queries(p, config.n_p, rng, id);
      for (std::size_t r = 0; r < recs.size(); ++r)
        push(r < n_test ? out.test : out.train, std::move(recs[r]));
    }
  }
  if (config.n_unseen_users > 0 && config.n_p_unseen > 0) {
    for (int j = 0; j < k; ++j) {
      const Persona& p = pool.personas[j];
      for (int i = 0; i < config.n_unseen_users; ++i) {
        const std::string id = p.id + "_u" + std::to_string(i);
        out.unseen.users.add({id, UserStatus::kUnseen, p.id});
        const std::uint64_t ord = static_cast<std::uint64_t>(k) * config.n_seen_users +
                                  static_cast<std::uint64_t>(j) * config.n_unseen_users + i;
        Rng rng(derive_seed(config.seed, ord));
        for (auto& rec : queries(p, config.n_p_unseen, rng, id)) push(out.unseen, std::move(rec));
      }
    }
  }
  out.train.validate();
  if (!out.test.comparisons.empty()) out.test.validate();
  if (!out.unseen.comparisons.empty()) out.unseen.validate();
  return out;
}

PersonaPool make_gaussian_persona_pool(int n_personas, int n_agree, int n_own_disagree,
                                       int dim, double separation, double spread,
                                       std::uint64_t seed) {
  if (n_personas < 1 || n_agree < 1 || n_own_disagree < 0 || dim < 1)
    throw ConfigError("persona pool sizes must be positive");
  if (!(separation >= 0.0) || !(spread >= 0.0))
    throw ConfigError("separation and spread must be >= 0");
  Rng rng(seed);
  const double centre_sd = separation / std::sqrt(2.0 * dim);
  const double noise_sd = spread / std::sqrt(static_cast<double>(dim));

  EmbeddingBuilder statements(dim);
  std::vector<std::vector<std::uint32_t>> agree(n_personas), own(n_personas);
  for (int j = 0; j < n_personas; ++j) {
    const Eigen::VectorXd plus = gaussian(dim, centre_sd, rng);
    const Eigen::VectorXd minus = gaussian(dim, centre_sd, rng);
    for (int s = 0; s < n_agree; ++s)
      agree[j].push_back(statements.append(Eigen::VectorXd(plus + gaussian(dim, noise_sd, rng))));
    for (int s = 0; s < n_own_disagree; ++s)
      own[j].push_back(statements.append(Eigen::VectorXd(minus + gaussian(dim, noise_sd, rng))));
  }
  PersonaPool pool{std::move(statements).build(), {}, {}, {}};
  const Eigen::VectorXd yes = gaussian(dim, 1.0 / std::sqrt(static_cast<double>(dim)), rng);
  const Eigen::VectorXd no = gaussian(dim, 1.0 / std::sqrt(static_cast<double>(dim)), rng);
  for (int c = 0; c < dim; ++c) {
    pool.yes_embedding.push_back(static_cast<float>(yes(c)));
    pool.no_embedding.push_back(static_cast<float>(no(c)));
  }
  for (int j = 0; j < n_personas; ++j) {
    Persona p{"persona" + std::to_string(j), agree[j], own[j]};
    for (int o = 0; o < n_personas; ++o)
      if (o != j) p.disagree.insert(p.disagree.end(), agree[o].begin(), agree[o].end());
    pool.personas.push_back(std::move(p));
  }
  pool.validate();
  return pool;
}

void save_persona_pool(const PersonaPool& pool, const std::filesystem::path& manifest) {
  pool.validate();
  const auto dir = manifest.parent_path();
  const std::string stem = manifest.stem().string();
  save_embeddings(pool.statements, dir / (stem + ".statements.pale"));
  save_embeddings(answers_matrix(pool), dir / (stem + ".answers.pale"));
  json personas = json::array();
  for (const auto& p : pool.personas)
    personas.push_back({{"id", p.id}, {"agree", p.agree}, {"disagree", p.disagree}});
  write_json_file({{"format", "pal-persona-pool"},
                   {"statements", stem + ".statements.pale"},
                   {"answers", stem + ".answers.pale"},
                   {"personas", personas}},
                  manifest);
}

PersonaPool load_persona_pool(const std::filesystem::path& manifest) {
  const json j = read_json_file(manifest);
  const auto dir = manifest.parent_path();
  try {
    if (j.at("format").get<std::string>() != "pal-persona-pool")
      throw FormatError("'" + manifest.string() + "' is not a persona pool manifest");
    EmbeddingMatrix answers =
        load_embeddings(resolve_relative(dir, j.at("answers").get<std::string>()));
    if (answers.rows() != 2)
      throw FormatError("persona answers must hold exactly two rows (yes, no)");
    PersonaPool pool{load_embeddings(resolve_relative(dir, j.at("statements").get<std::string>())),
                     {answers.row(0).begin(), answers.row(0).end()},
                     {answers.row(1).begin(), answers.row(1).end()},
                     {}};
    for (const auto& p : j.at("personas"))
      pool.personas.push_back({p.at("id").get<std::string>(), index_list(p.at("agree")),
                               index_list(p.at("disagree"))});
    pool.validate();
    return pool;
  } catch (const json::exception& e) {
    throw FormatError("'" + manifest.string() + "': " + e.what());
  }
}

// ------------------------------------------------------------------ filters

void FilterTable::validate() const {
  std::set<std::uint64_t> ids;
  for (const auto& r : records) {
    const std::string where = "filter pair " + std::to_string(r.pair_id);
    if (!ids.insert(r.pair_id).second) throw ValidationError(where + ": duplicate pair id");
    if (r.user.empty()) throw ValidationError(where + ": empty user id");
    const std::uint32_t idx[] = {r.winner_original, r.loser_original, r.winner_blue,
                                 r.winner_red, r.loser_blue, r.loser_red};
    for (auto i : idx)
      if (i >= items.rows())
        throw ValidationError(where + ": item index " + std::to_string(i) + " out of range");
    if (std::set<std::uint32_t>(std::begin(idx), std::end(idx)).size() != 6)
      throw ValidationError(where + ": the six variant indices must be distinct");
    if (contexts) {
      if (!r.context) throw ValidationError(where + ": missing context");
      if (*r.context >= contexts->rows())
        throw ValidationError(where + ": context index out of range");
    } else if (r.context) {
      throw ValidationError(where + ": context given but the table has no contexts");
    }
  }
}

void FilterConfig::validate() const {
  if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta must be in [0, 1]");
  if (n_seen_users < 0) throw ConfigError("n_seen_users must be >= 0");
  if (min_labels < 0) throw ConfigError("min_labels must be >= 0");
}

std::string FilterSplitTable::to_csv() const {
  std::ostringstream os;
  os << "group,status,train,val,test\n";
  for (int g = 0; g < 2; ++g)
    for (int s = 0; s < 2; ++s)
      os << "G" << g + 1 << ',' << (s == 0 ? "seen" : "unseen") << ',' << counts[g][s][0]
         << ',' << counts[g][s][1] << ',' << counts[g][s][2] << '\n';
  return os.str();
}

FilterBuild build_pick_a_filter(const FilterTable& table, const FilterConfig& config) {
  config.validate();
  table.validate();

  std::unordered_map<std::string, std::vector<std::size_t>> owned;
  std::vector<std::string> order;
  for (std::size_t i = 0; i < table.records.size(); ++i) {
    auto [it, fresh] = owned.try_emplace(table.records[i].user);
    if (fresh) order.push_back(table.records[i].user);
    it->second.push_back(i);
  }
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (const auto& u : order) {
    const auto lab = table.user_labels.find(u);
    const std::size_t n = lab != table.user_labels.end() ? lab->second : owned[u].size();
    if (n >= static_cast<std::size_t>(config.min_labels)) ranked.emplace_back(u, n);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });

  FilterBuild out{{table.items, table.contexts, {}, {}, Split::kTrain},
                  {table.items, table.contexts, {}, {}, Split::kVal},
                  {table.items, table.contexts, {}, {}, Split::kTest},
                  {table.items, table.contexts, {}, {}, Split::kTest},
                  {},
                  {}};
  UserRegistry registry;
  for (std::size_t rank = 0; rank < ranked.size(); ++rank) {
    const int group = static_cast<int>(rank % 2);
    const UserStatus status =
        rank < static_cast<std::size_t>(config.n_seen_users) ? UserStatus::kSeen : UserStatus::kUnseen;
    const std::string& user = ranked[rank].first;
    registry.add({user, status, group == 0 ? "G1" : "G2"});
    out.ranking.emplace_back(user, group);

    const auto& mine = owned[user];
    const std::size_t m = mine.size();
    const auto s = std::min<std::size_t>(m, static_cast<std::size_t>(std::lround(config.beta * m)));
    std::vector<std::uint32_t> positions(m);
    for (std::size_t i = 0; i < m; ++i) positions[i] = static_cast<std::uint32_t>(i);
    Rng rng(derive_seed(config.seed, rank));
    const auto shortlist = choose(positions, s, rng);
    std::vector<int> mode(m, 0);  // 0 original, 1 winner filtered, 2 loser filtered
    const std::size_t n_winner = (s + 1) / 2;
    for (std::size_t t = 0; t < s; ++t) mode[shortlist[t]] = t < n_winner ? 1 : 2;

    for (std::size_t i = 0; i < m; ++i) {
      const FilterRecord& fr = table.records[mine[i]];
      ComparisonRecord rec{fr.pair_id, user, fr.winner_original, fr.loser_original,
                           fr.context, +1, kTagOriginal};
      // G1 prefers blue and dislikes red; G2 the reverse.
      if (mode[i] == 1) {
        rec.left = group == 0 ? fr.winner_blue : fr.winner_red;
        rec.tag = kTagFilteredWinner;
      } else if (mode[i] == 2) {
        rec.right = group == 0 ? fr.loser_red : fr.loser_blue;
        rec.tag = kTagFilteredLoser;
      }
      ++out.table.counts[group][status == UserStatus::kSeen ? 0 : 1][static_cast<int>(fr.split)];
      switch (fr.split) {
        case Split::kTrain:
          (status == UserStatus::kSeen ? out.train : out.unseen_pool).comparisons.push_back(rec);
          break;
        case Split::kVal:
          out.val.comparisons.push_back(rec);
          break;
        case Split::kTest:
          out.test.comparisons.push_back(rec);
          break;
      }
    }
  }
  for (PreferenceDataset* ds : {&out.train, &out.val, &out.test, &out.unseen_pool}) {
    ds->users = registry;
    ds->users = ds->users_owning(ds->comparisons);
    if (!ds->comparisons.empty()) ds->validate();
  }
  return out;
}

FilterTable make_surrogate_filter_table(const SurrogateFilterConfig& config) {
  if (config.n_users < 1 || config.dim < 2 || config.train_per_user < 0 ||
      config.val_per_user < 0 || config.test_per_user < 0)
    throw ConfigError("surrogate filter table sizes must be positive");
  Rng rng(config.seed);
  const int d = config.dim;
  const double sd = 1.0 / std::sqrt(static_cast<double>(d));
  // Quality, blue and red directions, mutually orthogonal.
  Eigen::VectorXd q = unit(d, rng);
  Eigen::VectorXd blue = unit(d, rng);
  blue -= q * q.dot(blue);
  blue.normalize();
  Eigen::VectorXd red = unit(d, rng);
  red -= q * q.dot(red) + blue * blue.dot(red);
  red.normalize();

  EmbeddingBuilder items(d), contexts(d);
  std::vector<FilterRecord> records;
  std::map<std::string, std::size_t> labels;
  const double gain = config.shared_signal * std::sqrt(static_cast<double>(d));
  for (int u = 0; u < config.n_users; ++u) {
    const std::string id = "f" + std::to_string(u);
    const std::pair<Split, int> plan[] = {{Split::kTrain, config.train_per_user},
                                          {Split::kVal, config.val_per_user},
                                          {Split::kTest, config.test_per_user}};
    for (const auto& [split, n] : plan) {
      for (int r = 0; r < n; ++r) {
        Eigen::VectorXd a = gaussian(d, sd, rng);
        Eigen::VectorXd b = gaussian(d, sd, rng);
        const double ua = gain * q.dot(a) + rng.normal();
        const double ub = gain * q.dot(b) + rng.normal();
        if (ub > ua) std::swap(a, b);
        FilterRecord fr;
        fr.pair_id = records.size();
        fr.user = id;
        fr.split = split;
        fr.context = contexts.append(gaussian(d, sd, rng));
        fr.winner_original = items.append(a);
        fr.loser_original = items.append(b);
        fr.winner_blue = items.append(Eigen::VectorXd(a + config.filter_strength * blue));
        fr.winner_red = items.append(Eigen::VectorXd(a + config.filter_strength * red));
        fr.loser_blue = items.append(Eigen::VectorXd(b + config.filter_strength * blue));
        fr.loser_red = items.append(Eigen::VectorXd(b + config.filter_strength * red));
        records.push_back(fr);
        ++labels[id];
      }
    }
  }
  if (records.empty()) throw ConfigError("surrogate filter table would be empty");
  FilterTable table{std::move(items).build(), std::move(contexts).build(), std::move(records),
                    std::move(labels)};
  table.validate();
  return table;
}

void save_filter_table(const FilterTable& table, const std::filesystem::path& manifest) {
  table.validate();
  const auto dir = manifest.parent_path();
  const std::string stem = manifest.stem().string();
  save_embeddings(table.items, dir / (stem + ".items.pale"));
  json ctx = nullptr;
  if (table.contexts) {
    save_embeddings(*table.contexts, dir / (stem + ".contexts.pale"));
    ctx = stem + ".contexts.pale";
  }
  json recs = json::array();
  for (const auto& r : table.records) {
    recs.push_back({{"pair_id", r.pair_id},
                    {"user", r.user},
                    {"split", std::string(to_string(r.split))},
                    {"context", r.context ? json(*r.context) : json(nullptr)},
                    {"winner_original", r.winner_original},
                    {"loser_original", r.loser_original},
                    {"winner_blue", r.winner_blue},
                    {"winner_red", r.winner_red},
                    {"loser_blue", r.loser_blue},
                    {"loser_red", r.loser_red}});
  }
  write_json_file({{"format", "pal-filter-table"},
                   {"items", stem + ".items.pale"},
                   {"contexts", ctx},
                   {"user_labels", table.user_labels},
                   {"records", recs}},
                  manifest);
}

FilterTable load_filter_table(const std::filesystem::path& manifest) {
  const json j = read_json_file(manifest);
  const auto dir = manifest.parent_path();
  try {
    if (j.at("format").get<std::string>() != "pal-filter-table")
      throw FormatError("'" + manifest.string() + "' is not a filter table manifest");
    FilterTable table{load_embeddings(resolve_relative(dir, j.at("items").get<std::string>())),
                      std::nullopt,
                      {},
                      {}};
    if (j.contains("contexts") && !j.at("contexts").is_null())
      table.contexts = load_embeddings(resolve_relative(dir, j.at("contexts").get<std::string>()));
    if (j.contains("user_labels"))
      table.user_labels = j.at("user_labels").get<std::map<std::string, std::size_t>>();
    for (const auto& r : j.at("records")) {
      FilterRecord fr;
      fr.pair_id = r.at("pair_id").get<std::uint64_t>();
      fr.user = r.at("user").get<std::string>();
      fr.split = parse_split(r.at("split").get<std::string>());
      if (r.contains("context") && !r.at("context").is_null())
        fr.context = r.at("context").get<std::uint32_t>();
      fr.winner_original = r.at("winner_original").get<std::uint32_t>();
      fr.loser_original = r.at("loser_original").get<std::uint32_t>();
      fr.winner_blue = r.at("winner_blue").get<std::uint32_t>();
      fr.winner_red = r.at("winner_red").get<std::uint32_t>();
      fr.loser_blue = r.at("loser_blue").get<std::uint32_t>();
      fr.loser_red = r.at("loser_red").get<std::uint32_t>();
      table.records.push_back(std::move(fr));
    }
    table.validate();
    return table;
  } catch (const json::exception& e) {
    throw FormatError("'" + manifest.string() + "': " + e.what());
  }
}

}  // namespace pal
