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

#include "pal/dataset_io.hpp"

#include <fstream>

#include "pal/errors.hpp"
#include "pal/pale_io.hpp"

namespace pal {
namespace {

using nlohmann::json;

json read_json(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path.string() + "'");
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw FormatError("'" + path.string() + "': " + e.what());
  }
}

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::string& rel) {
  std::filesystem::path p(rel);
  return p.is_absolute() ? p : base / p;
}

}  // namespace

json read_json_file(const std::filesystem::path& path) { return read_json(path); }

void write_json_file(const json& j, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write '" + path.string() + "'");
  os << j.dump(2) << "\n";
  if (!os) throw IoError("write failed for '" + path.string() + "'");
}

std::filesystem::path resolve_relative(const std::filesystem::path& base,
                                       const std::string& rel) {
  return resolve(base, rel);
}

json users_to_json(const UserRegistry& users) {
  json out = json::array();
  for (const auto& u : users.entries()) {
    json e = {{"id", u.id}, {"status", std::string(to_string(u.status))}};
    if (!u.group.empty()) e["group"] = u.group;
    out.push_back(std::move(e));
  }
  return out;
}

UserRegistry users_from_json(const json& j) {
  UserRegistry users;
  for (const auto& e : j) {
    UserEntry u;
    u.id = e.at("id").get<std::string>();
    u.status = parse_user_status(e.at("status").get<std::string>());
    if (e.contains("group")) u.group = e.at("group").get<std::string>();
    users.add(std::move(u));
  }
  return users;
}

void save_dataset(const PreferenceDataset& ds,
                  const std::filesystem::path& manifest_path) {
  ds.validate();
  const auto dir = manifest_path.parent_path();
  const std::string stem = manifest_path.stem().string();
  const std::string items_name = stem + ".items.pale";
  save_embeddings(ds.items, dir / items_name);
  json j;
  j["items"] = items_name;
  if (ds.contexts) {
    const std::string ctx_name = stem + ".contexts.pale";
    save_embeddings(*ds.contexts, dir / ctx_name);
    j["contexts"] = ctx_name;
  } else {
    j["contexts"] = nullptr;
  }
  j["split"] = std::string(to_string(ds.split));
  j["users"] = users_to_json(ds.users);
  json comps = json::array();
  for (const auto& rec : ds.comparisons) {
    json c = {{"id", rec.id},       {"user", rec.user_id}, {"left", rec.left},
              {"right", rec.right}, {"label", rec.label}};
    c["context"] = rec.context ? json(*rec.context) : json(nullptr);
    if (!rec.tag.empty()) c["tag"] = rec.tag;
    comps.push_back(std::move(c));
  }
  j["comparisons"] = std::move(comps);
  std::ofstream os(manifest_path, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + manifest_path.string() + "' for writing");
  os << j.dump(1) << '\n';
  if (!os) throw IoError("failed writing '" + manifest_path.string() + "'");
}

PreferenceDataset load_dataset(const std::filesystem::path& manifest_path) {
  const json j = read_json(manifest_path);
  const auto dir = manifest_path.parent_path();
  try {
    EmbeddingMatrix items =
        load_embeddings(resolve(dir, j.at("items").get<std::string>()));
    std::optional<EmbeddingMatrix> contexts;
    if (j.contains("contexts") && !j.at("contexts").is_null())
      contexts = load_embeddings(resolve(dir, j.at("contexts").get<std::string>()));
    PreferenceDataset ds{std::move(items), std::move(contexts), {},
                         users_from_json(j.at("users")),
                         parse_split(j.value("split", std::string("train")))};
    const auto& comps = j.at("comparisons");
    ds.comparisons.reserve(comps.size());
    std::uint64_t position = 0;
    for (const auto& c : comps) {
      ComparisonRecord rec;
      rec.id = c.contains("id") ? c.at("id").get<std::uint64_t>() : position;
      rec.user_id = c.at("user").get<std::string>();
      rec.left = c.at("left").get<std::uint32_t>();
      rec.right = c.at("right").get<std::uint32_t>();
      if (c.contains("context") && !c.at("context").is_null())
        rec.context = c.at("context").get<std::uint32_t>();
      rec.label = c.at("label").get<int>();
      if (c.contains("tag")) rec.tag = c.at("tag").get<std::string>();
      ds.comparisons.push_back(std::move(rec));
      ++position;
    }
    ds.validate();
    return ds;
  } catch (const json::exception& e) {
    throw FormatError("'" + manifest_path.string() + "': " + e.what());
  }
}

}  // namespace pal
