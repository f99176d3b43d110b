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

// Random datasets and models for property tests.
#ifndef PAL_TESTS_RANDOM_WORLD_HPP_
#define PAL_TESTS_RANDOM_WORLD_HPP_

#include <string>
#include <vector>

#include "pal/core_data.hpp"
#include "pal/model.hpp"
#include "pal/rng.hpp"

namespace pal::testing {

inline EmbeddingMatrix random_matrix(std::size_t rows, std::size_t dim, Rng& rng) {
  std::vector<float> v(rows * dim);
  for (auto& x : v) x = static_cast<float>(rng.normal());
  return EmbeddingMatrix(rows, dim, std::move(v));
}

/// Users "r0".."r<n-1>", random item pairs and labels.
inline PreferenceDataset random_dataset(int item_dim, int context_dim, int n_users,
                                        int n_records, Rng& rng, int n_items = 20) {
  PreferenceDataset ds{random_matrix(n_items, item_dim, rng), std::nullopt, {}, {},
                       Split::kTrain};
  if (context_dim > 0) ds.contexts = random_matrix(n_items, context_dim, rng);
  for (int u = 0; u < n_users; ++u) ds.users.add({"r" + std::to_string(u), UserStatus::kSeen, ""});
  for (int r = 0; r < n_records; ++r) {
    ComparisonRecord rec;
    rec.id = r;
    rec.user_id = "r" + std::to_string(r % n_users);
    rec.left = static_cast<std::uint32_t>(rng.below(n_items));
    do {
      rec.right = static_cast<std::uint32_t>(rng.below(n_items));
    } while (rec.right == rec.left);
    if (context_dim > 0) rec.context = static_cast<std::uint32_t>(rng.below(n_items));
    rec.label = rng.bernoulli(0.5) ? 1 : -1;
    ds.comparisons.push_back(rec);
  }
  return ds;
}

inline ModelSpec mlp_model_spec(Variant v, int k, bool dropout = false) {
  ModelSpec s;
  s.variant = v;
  s.num_prototypes = k;
  s.f.hidden = {5};
  s.f.output_dim = 4;
  s.f.activation = Activation::kRelu;
  s.f.bias = true;
  s.f.dropout_rate = dropout ? 0.3 : 0.0;
  s.g = s.f;
  return s;
}

}  // namespace pal::testing

#endif  // PAL_TESTS_RANDOM_WORLD_HPP_
