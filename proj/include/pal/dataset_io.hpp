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

// JSON dataset manifests. A manifest names its embedding files relative to
// its own directory:
//
//   {"items": "x.items.pale", "contexts": null | "x.contexts.pale",
//    "split": "train" | "val" | "test",
//    "users": [{"id": "u0", "status": "seen", "group": "G1"}],
//    "comparisons": [{"id": 0, "user": "u0", "left": 3, "right": 7,
//                     "context": null, "label": 1, "tag": "original"}]}
//
// "group", "id" and "tag" are optional; a missing id defaults to the
// record's position.

#ifndef PAL_DATASET_IO_HPP_
#define PAL_DATASET_IO_HPP_

#include <filesystem>

#include "pal/core_data.hpp"
#include "vendor_json.hpp"

namespace pal {

/// Parses a JSON file; throws IoError / FormatError.
nlohmann::json read_json_file(const std::filesystem::path& path);
/// Writes pretty-printed JSON; throws IoError.
void write_json_file(const nlohmann::json& j, const std::filesystem::path& path);
/// `rel` resolved against `base` unless it is absolute.
std::filesystem::path resolve_relative(const std::filesystem::path& base,
                                       const std::string& rel);

/// Writes the manifest plus `<stem>.items.pale` (and contexts) beside it.
void save_dataset(const PreferenceDataset& ds,
                  const std::filesystem::path& manifest_path);

/// Loads and validates; throws FormatError / ValidationError.
PreferenceDataset load_dataset(const std::filesystem::path& manifest_path);

nlohmann::json users_to_json(const UserRegistry& users);
UserRegistry users_from_json(const nlohmann::json& j);

}  // namespace pal

#endif  // PAL_DATASET_IO_HPP_
