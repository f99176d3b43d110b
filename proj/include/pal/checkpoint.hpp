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

// Model checkpoints: a JSON header describing the architecture plus one
// PALE version-2 (float64) tensor file per parameter matrix, written next to
// the header as `<stem>.<tensor>.pale`. Reloading is bit-exact.

#ifndef PAL_CHECKPOINT_HPP_
#define PAL_CHECKPOINT_HPP_

#include <filesystem>

#include "pal/model.hpp"

namespace pal {

void save_model(const PalModel& model, const std::filesystem::path& header_path);
PalModel load_model(const std::filesystem::path& header_path);

}  // namespace pal

#endif  // PAL_CHECKPOINT_HPP_
