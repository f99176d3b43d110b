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

// Grid sweeps: one run directory per (cell, repetition), a resume marker,
// and summary / long-format CSVs computed from the cell results on disk.

#ifndef PAL_SWEEP_HPP_
#define PAL_SWEEP_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "pal/vendor_json.hpp"

namespace pal {

struct SweepRun {
  std::size_t cell = 0;
  int repetition = 0;
  nlohmann::json assignment;  // dotted key -> value
  nlohmann::json config;      // fully resolved, seed = base + repetition
  std::filesystem::path dir;
};

/// Cross product of sweep.grid (keys sorted, last key fastest) times
/// `repetitions`. Without a grid there is a single cell.
std::vector<SweepRun> expand_sweep(const nlohmann::json& config,
                                   const std::filesystem::path& out);

/// Runs every cell not already complete, then writes summary.csv.
/// sweep_state.json records progress and survives failures.
void run_sweep(const nlohmann::json& config, const std::filesystem::path& out);

/// Grid columns, n_runs, then <metric>_mean,<metric>_std per metric; one row
/// per cell. Standard deviations use the n-1 denominator (0 for one run).
std::string summarize_sweep(const nlohmann::json& config, const std::filesystem::path& out);

/// Long format: grid columns,repetition,seed,metric,value.
std::string plot_data(const nlohmann::json& config, const std::filesystem::path& out);

}  // namespace pal

#endif  // PAL_SWEEP_HPP_
