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

#include "pal/experiment.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "pal/checkpoint.hpp"
#include "pal/dataset_io.hpp"
#include "pal/errors.hpp"
#include "pal/evaluator.hpp"

namespace pal {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json mlp_defaults() {
  return {{"hidden", json::array()},   {"output_dim", 0},
          {"activation", "identity"},  {"bias", false},
          {"residual", false},         {"activate_output", false},
          {"dropout_rate", 0.0}};
}

bool numeric(const json& j) { return j.is_number(); }

// Overlays `user` on `def`, checking keys and value types.
json merge(const json& def, const json& user, const std::string& path) {
  const std::string where = path.empty() ? "<root>" : path;
  if (def.is_object()) {
    if (!user.is_object()) throw ConfigError("config '" + where + "' must be an object");
    json out = def;
    const bool free_keys = path == "sweep.grid";
    for (auto it = user.begin(); it != user.end(); ++it) {
      const std::string child = path.empty() ? it.key() : path + "." + it.key();
      if (free_keys) {
        if (!it.value().is_array() || it.value().empty())
          throw ConfigError("sweep grid '" + it.key() + "' must be a non-empty array");
        out[it.key()] = it.value();
        continue;
      }
      if (!def.contains(it.key())) throw ConfigError("unknown config key '" + child + "'");
      out[it.key()] = merge(def.at(it.key()), it.value(), child);
    }
    return out;
  }
  if (def.is_null()) {
    if (!user.is_null() && !user.is_string())
      throw ConfigError("config '" + where + "' must be a string or null");
    return user;
  }
  if (numeric(def)) {
    if (!numeric(user)) throw ConfigError("config '" + where + "' must be a number");
    if (!def.is_number_float() && user.is_number_float()) {
      const double v = user.get<double>();
      if (v != static_cast<double>(static_cast<long long>(v)))
        throw ConfigError("config '" + where + "' must be an integer");
      return static_cast<long long>(v);
    }
    if (def.is_number_unsigned() && user.is_number_integer() && user.get<long long>() < 0)
      throw ConfigError("config '" + where + "' must be non-negative");
    return user;
  }
  if (def.is_boolean() && !user.is_boolean())
    throw ConfigError("config '" + where + "' must be a boolean");
  if (def.is_string() && !user.is_string())
    throw ConfigError("config '" + where + "' must be a string");
  if (def.is_array() && !user.is_array())
    throw ConfigError("config '" + where + "' must be an array");
  return user;
}

std::vector<std::string> split_path(std::string_view dotted) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = dotted.find('.', start);
    parts.emplace_back(dotted.substr(start, dot - start));
    if (parts.back().empty()) throw ConfigError("malformed config path '" + std::string(dotted) + "'");
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return parts;
}

MlpSpec mlp_spec_from(const json& j) {
  MlpSpec s;
  s.hidden = j.at("hidden").get<std::vector<int>>();
  s.output_dim = j.at("output_dim").get<int>();
  s.activation = parse_activation(j.at("activation").get<std::string>());
  s.bias = j.at("bias").get<bool>();
  s.residual = j.at("residual").get<bool>();
  s.activate_output = j.at("activate_output").get<bool>();
  s.dropout_rate = j.at("dropout_rate").get<double>();
  return s;
}

std::optional<std::string> opt_string(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<std::string>();
}

void write_text(const std::string& text, const fs::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write '" + path.string() + "'");
  os << text;
  if (!os) throw IoError("write failed for '" + path.string() + "'");
}

void prepare_out(const fs::path& out, const json& config) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create '" + out.string() + "': " + ec.message());
  write_json_file(config, out / "config.json");
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

json default_config() {
  return {
      {"seed", 0},
      {"repetitions", 1},
      {"data",
       {{"kind", "synthetic"},
        {"synthetic",
         {{"d", 16},
          {"k_star", 3},
          {"n_users", 100},
          {"n_per_user", 100},
          {"n_heldout_per_user", 50},
          {"n_unseen_users", 0},
          {"n_per_unseen_user", 0},
          {"delta", 1.0},
          {"setting", "mixture"},
          {"max_prototype_attempts", 100000}}},
        {"persona",
         {{"pool", nullptr},
          {"surrogate",
           {{"n_personas", 2},
            {"n_agree", 200},
            {"n_own_disagree", 200},
            {"dim", 16},
            {"separation", 4.0},
            {"spread", 1.0}}},
          {"k_star", 2},
          {"n_seen_users", 10},
          {"n_unseen_users", 0},
          {"n_p", 100},
          {"n_p_unseen", 0},
          {"seen_test_fraction", 0.2}}},
        {"filter",
         {{"table", nullptr},
          {"surrogate",
           {{"n_users", 40},
            {"train_per_user", 100},
            {"val_per_user", 10},
            {"test_per_user", 40},
            {"dim", 16},
            {"shared_signal", 1.0},
            {"filter_strength", 1.0}}},
          {"beta", 0.5},
          {"n_seen_users", 50},
          {"min_labels", 50}}},
        {"manifest",
         {{"train", nullptr},
          {"val", nullptr},
          {"test", nullptr},
          {"unseen", nullptr},
          {"ground_truth", nullptr}}}}},
      {"model",
       {{"variant", "A"},
        {"num_prototypes", 3},
        {"flip_b_order", false},
        {"f", mlp_defaults()},
        {"g", mlp_defaults()}}},
      {"train",
       {{"loss", "hinge"},
        {"lr_f", 5e-4},
        {"lr_proto_weights", 5e-3},
        {"weight_decay_f", 1e-3},
        {"batch_size", 512},
        {"epochs", 1000},
        {"eval_every", 1},
        {"keep_best_on_val", false},
        {"localize_with_dropout", false},
        {"use_val", true}}},
      {"eval",
       {{"checkpoint", nullptr}, {"n_loc", 10}, {"subsets", true}, {"groups", true}}},
      {"sweep", {{"grid", json::object()}}},
  };
}

json resolve_config(const json& user, std::span<const std::string> overrides) {
  const json def = default_config();
  json out = merge(def, user.is_null() ? json::object() : user, "");
  for (const auto& o : overrides) apply_override(out, o);
  out = merge(def, out, "");
  for (auto it = out.at("sweep").at("grid").begin(); it != out.at("sweep").at("grid").end(); ++it) {
    if (it.key().rfind("sweep", 0) == 0) throw ConfigError("sweep grid cannot vary 'sweep'");
    config_at(out, it.key());
  }
  return out;
}

void apply_override(json& config, std::string_view assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json* node = &config;
  const auto parts = split_path(key);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->is_object() || !node->contains(parts[i]))
      throw ConfigError("unknown config key '" + key + "'");
    node = &(*node)[parts[i]];
  }
  const bool free_keys = parts.size() == 3 && parts[0] == "sweep" && parts[1] == "grid";
  if (!node->is_object() || (!free_keys && !node->contains(parts.back())))
    throw ConfigError("unknown config key '" + key + "'");
  (*node)[parts.back()] = std::move(value);
}

const json& config_at(const json& config, std::string_view dotted) {
  const json* node = &config;
  for (const auto& p : split_path(dotted)) {
    if (!node->is_object() || !node->contains(p))
      throw ConfigError("unknown config key '" + std::string(dotted) + "'");
    node = &node->at(p);
  }
  return *node;
}

SyntheticConfig synthetic_config_from(const json& config) {
  const json& j = config.at("data").at("synthetic");
  SyntheticConfig c;
  c.d = j.at("d").get<int>();
  c.k_star = j.at("k_star").get<int>();
  c.n_users = j.at("n_users").get<int>();
  c.n_per_user = j.at("n_per_user").get<int>();
  c.n_heldout_per_user = j.at("n_heldout_per_user").get<int>();
  c.n_unseen_users = j.at("n_unseen_users").get<int>();
  c.n_per_unseen_user = j.at("n_per_unseen_user").get<int>();
  c.delta = j.at("delta").get<double>();
  c.setting = parse_user_setting(j.at("setting").get<std::string>());
  c.max_prototype_attempts = j.at("max_prototype_attempts").get<int>();
  c.seed = config.at("seed").get<std::uint64_t>();
  c.validate();
  return c;
}

PersonaConfig persona_config_from(const json& config) {
  const json& j = config.at("data").at("persona");
  PersonaConfig c;
  c.k_star = j.at("k_star").get<int>();
  c.n_seen_users = j.at("n_seen_users").get<int>();
  c.n_unseen_users = j.at("n_unseen_users").get<int>();
  c.n_p = j.at("n_p").get<int>();
  c.n_p_unseen = j.at("n_p_unseen").get<int>();
  c.seen_test_fraction = j.at("seen_test_fraction").get<double>();
  c.seed = config.at("seed").get<std::uint64_t>();
  c.validate();
  return c;
}

FilterConfig filter_config_from(const json& config) {
  const json& j = config.at("data").at("filter");
  FilterConfig c;
  c.beta = j.at("beta").get<double>();
  c.n_seen_users = j.at("n_seen_users").get<int>();
  c.min_labels = j.at("min_labels").get<int>();
  c.seed = config.at("seed").get<std::uint64_t>();
  c.validate();
  return c;
}

TrainConfig train_config_from(const json& config) {
  const json& j = config.at("train");
  TrainConfig c;
  c.loss = parse_loss(j.at("loss").get<std::string>());
  c.lr_f = j.at("lr_f").get<double>();
  c.lr_proto_weights = j.at("lr_proto_weights").get<double>();
  c.weight_decay_f = j.at("weight_decay_f").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.epochs = j.at("epochs").get<int>();
  c.eval_every = j.at("eval_every").get<int>();
  c.keep_best_on_val = j.at("keep_best_on_val").get<bool>();
  c.localize_with_dropout = j.at("localize_with_dropout").get<bool>();
  c.seed = config.at("seed").get<std::uint64_t>();
  c.validate();
  return c;
}

ModelSpec model_spec_from(const json& config) {
  const json& j = config.at("model");
  ModelSpec s;
  s.variant = parse_variant(j.at("variant").get<std::string>());
  s.num_prototypes = j.at("num_prototypes").get<int>();
  s.flip_b_order = j.at("flip_b_order").get<bool>();
  s.f = mlp_spec_from(j.at("f"));
  s.g = mlp_spec_from(j.at("g"));
  if (s.num_prototypes < 1) throw ConfigError("model.num_prototypes must be >= 1");
  return s;
}

DataBundle prepare_data(const json& config) {
  const std::string kind = config.at("data").at("kind").get<std::string>();
  const std::uint64_t seed = config.at("seed").get<std::uint64_t>();
  if (kind == "synthetic") {
    SyntheticWorld w = make_synthetic_world(synthetic_config_from(config));
    DataBundle b{std::move(w.train), std::nullopt, std::nullopt, std::move(w.unseen),
                 std::move(w.truth), std::nullopt};
    if (!w.test.comparisons.empty()) b.test = std::move(w.test);
    return b;
  }
  if (kind == "persona") {
    const json& j = config.at("data").at("persona");
    PersonaPool pool = [&] {
      if (auto p = opt_string(j.at("pool"))) return load_persona_pool(*p);
      const json& s = j.at("surrogate");
      return make_gaussian_persona_pool(
          s.at("n_personas").get<int>(), s.at("n_agree").get<int>(),
          s.at("n_own_disagree").get<int>(), s.at("dim").get<int>(),
          s.at("separation").get<double>(), s.at("spread").get<double>(), derive_seed(seed, 31));
    }();
    PersonaBuild pb = build_persona_dataset(pool, persona_config_from(config));
    DataBundle b{std::move(pb.train), std::nullopt, std::nullopt, std::nullopt, std::nullopt,
                 std::nullopt};
    if (!pb.test.comparisons.empty()) b.test = std::move(pb.test);
    if (!pb.unseen.comparisons.empty()) b.unseen = std::move(pb.unseen);
    return b;
  }
  if (kind == "filter") {
    const json& j = config.at("data").at("filter");
    FilterTable table = [&] {
      if (auto p = opt_string(j.at("table"))) return load_filter_table(*p);
      const json& s = j.at("surrogate");
      SurrogateFilterConfig sc;
      sc.n_users = s.at("n_users").get<int>();
      sc.train_per_user = s.at("train_per_user").get<int>();
      sc.val_per_user = s.at("val_per_user").get<int>();
      sc.test_per_user = s.at("test_per_user").get<int>();
      sc.dim = s.at("dim").get<int>();
      sc.shared_signal = s.at("shared_signal").get<double>();
      sc.filter_strength = s.at("filter_strength").get<double>();
      sc.seed = derive_seed(seed, 32);
      return make_surrogate_filter_table(sc);
    }();
    FilterBuild fb = build_pick_a_filter(table, filter_config_from(config));
    if (fb.train.comparisons.empty()) throw ConfigError("filter build produced no training records");
    DataBundle b{std::move(fb.train), std::nullopt, std::nullopt, std::nullopt, std::nullopt,
                 fb.table};
    if (!fb.val.comparisons.empty()) b.val = std::move(fb.val);
    if (!fb.test.comparisons.empty()) b.test = std::move(fb.test);
    if (!fb.unseen_pool.comparisons.empty()) b.unseen = std::move(fb.unseen_pool);
    return b;
  }
  if (kind == "manifest") {
    const json& j = config.at("data").at("manifest");
    auto train = opt_string(j.at("train"));
    if (!train) throw ConfigError("data.manifest.train is required");
    DataBundle b{load_dataset(*train), std::nullopt, std::nullopt, std::nullopt, std::nullopt,
                 std::nullopt};
    if (auto p = opt_string(j.at("val"))) b.val = load_dataset(*p);
    if (auto p = opt_string(j.at("test"))) b.test = load_dataset(*p);
    if (auto p = opt_string(j.at("unseen"))) b.unseen = load_dataset(*p);
    if (auto p = opt_string(j.at("ground_truth")))
      b.truth = ground_truth_from_json(read_json_file(*p));
    return b;
  }
  throw ConfigError("unknown data.kind '" + kind + "'");
}

void write_data(const DataBundle& data, const fs::path& out) {
  save_dataset(data.train, out / "train.json");
  if (data.val) save_dataset(*data.val, out / "val.json");
  if (data.test) save_dataset(*data.test, out / "test.json");
  if (data.unseen) save_dataset(*data.unseen, out / "unseen.json");
  if (data.truth) write_json_file(ground_truth_to_json(*data.truth), out / "ground_truth.json");
  if (data.split_table) write_text(data.split_table->to_csv(), out / "split_table.csv");
}

PalModel build_model(const json& config, const DataBundle& data) {
  ModelSpec spec = model_spec_from(config);
  const int item_dim = static_cast<int>(data.train.items.dim());
  const int ctx_dim = data.train.contexts ? static_cast<int>(data.train.contexts->dim()) : 0;
  Rng rng(derive_seed(config.at("seed").get<std::uint64_t>(), 10));
  return make_model(spec, item_dim, ctx_dim, data.train.users.ids(), rng);
}

json evaluate_bundle(const PalModel& model, const DataBundle& data, const json& config) {
  const TrainConfig tc = train_config_from(config);
  const json& ev = config.at("eval");
  EvalReport report;
  if (data.test) {
    const PreferenceDataset seen = data.test->filtered(
        [&](const ComparisonRecord& r) { return model.weights.column_of(r.user_id).has_value(); });
    if (!seen.comparisons.empty()) {
      report.seen_accuracy = accuracy(model, seen, WeightSource::table());
      report.seen_records = seen.comparisons.size();
      if (ev.at("groups").get<bool>())
        report.per_group = group_breakdown(model, seen, WeightSource::table());
      bool tagged = false;
      for (const auto& r : seen.comparisons) tagged = tagged || !r.tag.empty();
      if (tagged && ev.at("subsets").get<bool>())
        report.per_subset = subset_breakdown(model, seen, WeightSource::table(),
                                             [](const ComparisonRecord& r) { return r.tag; });
    }
  }
  if (data.unseen && !data.unseen->comparisons.empty()) {
    const UnseenResult few = evaluate_unseen(model, *data.unseen, ev.at("n_loc").get<int>(), tc);
    if (few.records_scored > 0) {
      report.unseen_accuracy = few.accuracy;
      report.unseen_records = few.records_scored;
    }
    const UnseenResult zero = evaluate_unseen(model, *data.unseen, 0, tc);
    report.zero_shot_accuracy = zero.accuracy;
    report.zero_shot_records = zero.records_scored;
  }
  json j = report.to_json();
  if (data.truth && model.variant == Variant::kA &&
      std::max<int>(model.num_prototypes(), data.truth->prototypes.cols()) <= kMaxExhaustiveMatching) {
    const AlignmentDiagnostics a = alignment_diagnostics(model, *data.truth);
    j["alignment"] = {{"prototype_match_cost", a.prototype_match_cost},
                      {"user_point_error", a.user_point_error},
                      {"matching", a.matching}};
  }
  j["_csv"] = report.to_csv();
  return j;
}

json run_train(const json& config, const fs::path& out) {
  prepare_out(out, config);
  const DataBundle data = prepare_data(config);
  PalModel model = build_model(config, data);
  const TrainConfig tc = train_config_from(config);
  const bool use_val = config.at("train").at("use_val").get<bool>() && data.val.has_value();
  TrainResult result = train(std::move(model), data.train, use_val ? &*data.val : nullptr, tc);
  save_model(result.model, out / "model.json");
  write_text(result.history.to_csv(), out / "history.csv");

  json report = evaluate_bundle(result.model, data, config);
  write_text(report.at("_csv").get<std::string>(), out / "report.csv");
  report.erase("_csv");
  write_json_file(report, out / "report.json");

  json metrics = json::object();
  for (const char* key : {"seen_accuracy", "unseen_accuracy", "zero_shot_accuracy"})
    if (!report.at(key).is_null()) metrics[key] = report.at(key);
  if (!result.history.epochs.empty()) {
    metrics["final_train_loss"] = result.history.epochs.back().train_loss;
    metrics["final_train_accuracy"] = result.history.epochs.back().train_accuracy;
  }
  if (report.contains("alignment"))
    metrics["prototype_match_cost"] = report.at("alignment").at("prototype_match_cost");
  write_json_file(metrics, out / "metrics.json");
  return metrics;
}

void run_generate(const json& config, const fs::path& out) {
  prepare_out(out, config);
  write_data(prepare_data(config), out);
}

void run_eval(const json& config, const fs::path& out) {
  const auto ckpt = opt_string(config.at("eval").at("checkpoint"));
  if (!ckpt) throw ConfigError("eval.checkpoint is required");
  prepare_out(out, config);
  const PalModel model = load_model(*ckpt);
  json report = evaluate_bundle(model, prepare_data(config), config);
  write_text(report.at("_csv").get<std::string>(), out / "report.csv");
  report.erase("_csv");
  write_json_file(report, out / "report.json");
}

void run_localize(const json& config, const fs::path& out) {
  const auto ckpt = opt_string(config.at("eval").at("checkpoint"));
  if (!ckpt) throw ConfigError("eval.checkpoint is required");
  prepare_out(out, config);
  const PalModel model = load_model(*ckpt);
  const DataBundle data = prepare_data(config);
  if (!data.unseen) throw ConfigError("localize needs unseen-user data");
  const UnseenResult r =
      evaluate_unseen(model, *data.unseen, config.at("eval").at("n_loc").get<int>(),
                      train_config_from(config));
  std::ostringstream os;
  os << "user";
  for (int k = 0; k < model.num_prototypes(); ++k) os << ",w" << k;
  os << '\n';
  for (const auto& [user, w] : r.weights) {
    os << user;
    for (Eigen::Index k = 0; k < w.size(); ++k) os << ',' << fmt17(w(k));
    os << '\n';
  }
  write_text(os.str(), out / "weights.csv");
}

json error_json(const std::exception& e) {
  std::string kind = "internal";
  if (const auto* pe = dynamic_cast<const Error*>(&e)) kind = pe->kind();
  return {{"error", {{"kind", kind}, {"message", e.what()}}}};
}

}  // namespace pal
