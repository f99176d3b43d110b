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

// pal <gen-synth|gen-persona|gen-filter|train|eval|localize|sweep|plot-data>
//     [--config <path>] [--set key=value ...] [--out <dir>]

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pal/dataset_io.hpp"
#include "pal/errors.hpp"
#include "pal/experiment.hpp"
#include "pal/sweep.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string> kCommands = {"gen-synth", "gen-persona", "gen-filter", "train",
                                            "eval",      "localize",    "sweep",      "plot-data"};

json load_config(const std::string& path, const std::string& command,
                 const std::vector<std::string>& overrides) {
  json user = path.empty() ? json::object() : pal::read_json_file(path);
  std::vector<std::string> all;
  // gen-* commands fix the data kind unless the config says otherwise.
  if (command == "gen-synth") all.push_back("data.kind=synthetic");
  if (command == "gen-persona") all.push_back("data.kind=persona");
  if (command == "gen-filter") all.push_back("data.kind=filter");
  if (!all.empty() && user.is_object() && user.contains("data") && user["data"].contains("kind"))
    all.clear();
  all.insert(all.end(), overrides.begin(), overrides.end());
  return pal::resolve_config(user, all);
}

void write_file(const std::string& text, const fs::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw pal::IoError("cannot write '" + path.string() + "'");
  os << text;
}

void run(const std::string& command, const json& config, const fs::path& out) {
  if (command == "gen-synth" || command == "gen-persona" || command == "gen-filter") {
    pal::run_generate(config, out);
  } else if (command == "train") {
    pal::run_train(config, out);
  } else if (command == "eval") {
    pal::run_eval(config, out);
  } else if (command == "localize") {
    pal::run_localize(config, out);
  } else if (command == "sweep") {
    pal::run_sweep(config, out);
  } else if (command == "plot-data") {
    fs::create_directories(out);
    write_file(pal::plot_data(config, out), out / "plot_data.csv");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixture-of-prototype reward models from pairwise preferences"};
  std::string command;
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out = "pal_out";
  app.add_option("command", command, "Subcommand")
      ->required()
      ->check(CLI::IsMember(kCommands));
  app.add_option("--config", config_path, "Experiment config (JSON)");
  app.add_option("--set", overrides, "Override as dotted.key=value (repeatable)");
  app.add_option("--out", out, "Output directory");
  CLI11_PARSE(app, argc, argv);

  try {
    const json config = load_config(config_path, command, overrides);
    run(command, config, out);
  } catch (const std::exception& e) {
    const json err = pal::error_json(e);
    std::cerr << err.dump() << std::endl;
    std::error_code ec;
    if (fs::is_directory(out, ec)) {
      std::ofstream os(fs::path(out) / "error.json");
      os << err.dump(2) << '\n';
    }
    return 1;
  }
  return 0;
}
