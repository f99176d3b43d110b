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

// Declarative experiment configs: a single JSON document merged over
// explicit defaults, dotted `key=value` overrides, and the runners behind the
// command-line subcommands.

#ifndef PAL_EXPERIMENT_HPP_
#define PAL_EXPERIMENT_HPP_

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "pal/core_data.hpp"
#include "pal/model.hpp"
#include "pal/semi_synthetic.hpp"
#include "pal/synthetic.hpp"
#include "pal/trainer.hpp"
#include "pal/vendor_json.hpp"

namespace pal {

/// Every accepted key with its default value.
nlohmann::json default_config();

/// Defaults overlaid with `user`, then the overrides in order. Unknown keys
/// and type mismatches throw ConfigError.
nlohmann::json resolve_config(const nlohmann::json& user,
                              std::span<const std::string> overrides = {});

/// `a.b.c=value`; value is parsed as JSON when possible, else kept as a string.
void apply_override(nlohmann::json& config, std::string_view assignment);

/// Reads the value at a dotted path; throws ConfigError if absent.
const nlohmann::json& config_at(const nlohmann::json& config, std::string_view dotted);

SyntheticConfig synthetic_config_from(const nlohmann::json& config);
PersonaConfig persona_config_from(const nlohmann::json& config);
FilterConfig filter_config_from(const nlohmann::json& config);
TrainConfig train_config_from(const nlohmann::json& config);
ModelSpec model_spec_from(const nlohmann::json& config);

struct DataBundle {
  PreferenceDataset train;
  std::optional<PreferenceDataset> val;
  std::optional<PreferenceDataset> test;
  std::optional<PreferenceDataset> unseen;
  std::optional<GroundTruth> truth;
  std::optional<FilterSplitTable> split_table;
};

/// Builds or loads the datasets named by the `data` section.
DataBundle prepare_data(const nlohmann::json& config);

/// Writes every dataset of the bundle as manifests under `out`.
void write_data(const DataBundle& data, const std::filesystem::path& out);

/// Fresh model for the bundle's dimensions and training users.
PalModel build_model(const nlohmann::json& config, const DataBundle& data);

/// Seen / unseen / zero-shot metrics for a trained model.
nlohmann::json evaluate_bundle(const PalModel& model, const DataBundle& data,
                               const nlohmann::json& config);

/// Data, training and evaluation in one directory: config.json, model.json
/// (+ tensors), history.csv, report.json, report.csv, metrics.json. Returns
/// the metrics object.
nlohmann::json run_train(const nlohmann::json& config, const std::filesystem::path& out);

/// Data generation only (gen-synth / gen-persona / gen-filter).
void run_generate(const nlohmann::json& config, const std::filesystem::path& out);

/// Scores the checkpoint named by eval.checkpoint.
void run_eval(const nlohmann::json& config, const std::filesystem::path& out);

/// Localizes every unseen user on eval.n_loc records and writes weights.csv.
void run_localize(const nlohmann::json& config, const std::filesystem::path& out);

/// Machine-readable description of an exception.
nlohmann::json error_json(const std::exception& e);

}  // namespace pal

#endif  // PAL_EXPERIMENT_HPP_
