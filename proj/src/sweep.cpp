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

#include "pal/sweep.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pal/dataset_io.hpp"
#include "pal/errors.hpp"
#include "pal/experiment.hpp"

namespace pal {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

const char* const kMetrics[] = {"seen_accuracy",      "unseen_accuracy",
                                "zero_shot_accuracy", "final_train_loss",
                                "final_train_accuracy", "prototype_match_cost"};

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string cell_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) return fmt17(v.get<double>());
  return v.dump();
}

std::vector<std::string> grid_keys(const json& config) {
  std::vector<std::string> keys;
  for (auto it = config.at("sweep").at("grid").begin(); it != config.at("sweep").at("grid").end();
       ++it)
    keys.push_back(it.key());
  return keys;
}

std::optional<json> read_metrics(const SweepRun& run) {
  if (!fs::exists(run.dir / "metrics.json") || !fs::exists(run.dir / "config.json"))
    return std::nullopt;
  if (read_json_file(run.dir / "config.json") != run.config) return std::nullopt;
  return read_json_file(run.dir / "metrics.json");
}

void write_state(const fs::path& out, const std::string& status, std::size_t done,
                 std::size_t total, const json& failure = nullptr) {
  json j = {{"status", status}, {"completed", done}, {"total", total}};
  if (!failure.is_null()) j["failure"] = failure;
  write_json_file(j, out / "sweep_state.json");
}

void write_text(const std::string& text, const fs::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write '" + path.string() + "'");
  os << text;
}

}  // namespace

std::vector<SweepRun> expand_sweep(const json& config, const fs::path& out) {
  const auto keys = grid_keys(config);
  const json& grid = config.at("sweep").at("grid");
  const int reps = config.at("repetitions").get<int>();
  if (reps < 1) throw ConfigError("repetitions must be >= 1");
  std::size_t cells = 1;
  for (const auto& k : keys) cells *= grid.at(k).size();

  json base = config;
  base["sweep"]["grid"] = json::object();
  base["repetitions"] = 1;
  const auto base_seed = config.at("seed").get<std::uint64_t>();

  std::vector<SweepRun> runs;
  for (std::size_t c = 0; c < cells; ++c) {
    json assignment = json::object();
    std::size_t rem = c;
    for (std::size_t i = keys.size(); i-- > 0;) {
      const json& values = grid.at(keys[i]);
      assignment[keys[i]] = values.at(rem % values.size());
      rem /= values.size();
    }
    for (int r = 0; r < reps; ++r) {
      std::vector<std::string> overrides;
      for (const auto& k : keys) overrides.push_back(k + "=" + assignment.at(k).dump());
      overrides.push_back("seed=" + std::to_string(base_seed + r));
      SweepRun run{c, r, assignment, resolve_config(base, overrides),
                   out / ("cell_" + std::to_string(c)) / ("rep_" + std::to_string(r))};
      runs.push_back(std::move(run));
    }
  }
  return runs;
}

void run_sweep(const json& config, const fs::path& out) {
  const auto runs = expand_sweep(config, out);
  fs::create_directories(out);
  write_json_file(config, out / "config.json");
  std::size_t done = 0;
  for (const auto& run : runs)
    if (read_metrics(run)) ++done;
  write_state(out, "running", done, runs.size());
  for (const auto& run : runs) {
    if (read_metrics(run)) continue;
    try {
      run_train(run.config, run.dir);
    } catch (const std::exception& e) {
      json failure = error_json(e);
      failure["run"] = run.dir.lexically_relative(out).generic_string();
      write_state(out, "incomplete", done, runs.size(), failure);
      throw;
    }
    write_state(out, "running", ++done, runs.size());
  }
  write_text(summarize_sweep(config, out), out / "summary.csv");
  write_state(out, "complete", done, runs.size());
}

std::string summarize_sweep(const json& config, const fs::path& out) {
  const auto runs = expand_sweep(config, out);
  const auto keys = grid_keys(config);
  std::vector<std::vector<json>> per_cell;
  std::vector<json> assignments;
  for (const auto& run : runs) {
    if (run.cell >= per_cell.size()) {
      per_cell.emplace_back();
      assignments.push_back(run.assignment);
    }
    if (auto m = read_metrics(run)) per_cell[run.cell].push_back(*m);
  }
  std::vector<std::string> metrics;
  for (const char* m : kMetrics) {
    bool any = false;
    for (const auto& cell : per_cell)
      for (const auto& j : cell) any = any || j.contains(m);
    if (any) metrics.push_back(m);
  }

  std::ostringstream os;
  for (const auto& k : keys) os << k << ',';
  os << "n_runs";
  for (const auto& m : metrics) os << ',' << m << "_mean," << m << "_std";
  os << '\n';
  for (std::size_t c = 0; c < per_cell.size(); ++c) {
    for (const auto& k : keys) os << cell_text(assignments[c].at(k)) << ',';
    os << per_cell[c].size();
    for (const auto& m : metrics) {
      std::vector<double> v;
      for (const auto& j : per_cell[c])
        if (j.contains(m)) v.push_back(j.at(m).get<double>());
      if (v.empty()) {
        os << ",,";
        continue;
      }
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= v.size();
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      const double sd = v.size() > 1 ? std::sqrt(ss / (v.size() - 1)) : 0.0;
      os << ',' << fmt17(mean) << ',' << fmt17(sd);
    }
    os << '\n';
  }
  return os.str();
}

std::string plot_data(const json& config, const fs::path& out) {
  const auto keys = grid_keys(config);
  std::ostringstream os;
  for (const auto& k : keys) os << k << ',';
  os << "repetition,seed,metric,value\n";
  for (const auto& run : expand_sweep(config, out)) {
    const auto m = read_metrics(run);
    if (!m) continue;
    for (const char* name : kMetrics) {
      if (!m->contains(name)) continue;
      for (const auto& k : keys) os << cell_text(run.assignment.at(k)) << ',';
      os << run.repetition << ',' << run.config.at("seed").dump() << ',' << name << ','
         << fmt17(m->at(name).get<double>()) << '\n';
    }
  }
  return os.str();
}

}  // namespace pal
