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

// Gradients, training loops, few-shot user localization and zero-shot
// weights for PAL models.

#ifndef PAL_TRAINER_HPP_
#define PAL_TRAINER_HPP_

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pal/adam.hpp"
#include "pal/core_data.hpp"
#include "pal/losses.hpp"
#include "pal/model.hpp"

namespace pal {

struct TrainConfig {
  Loss loss = Loss::kHinge;
  double lr_f = 5e-4;              // f and the prototype functions g_k
  double lr_proto_weights = 5e-3;  // prototypes P and user weights W
  double weight_decay_f = 1e-3;    // L2 on network parameters only
  int batch_size = 512;
  int epochs = 1000;
  int eval_every = 1;
  std::uint64_t seed = 0;
  bool keep_best_on_val = false;
  // Localization only: evaluate the frozen networks in train mode (dropout).
  bool localize_with_dropout = false;

  void validate() const;
};

/// Gradient buffers shaped like the model's parameters.
struct ModelGrads {
  MlpGrads f;
  Eigen::MatrixXd prototypes;
  std::vector<MlpGrads> g;
  Eigen::MatrixXd weights;

  static ModelGrads zeros_like(const PalModel& model);
  void set_zero();
};

/// Backpropagates d(loss)/d(margin) through a forward pass made with weight
/// vector `w`. Shared-parameter gradients are accumulated into `grads`
/// (skipped when null); the weight gradient is added to `grad_w`.
void backward(const PalModel& model, const MarginPass& pass,
              const Eigen::Ref<const Eigen::VectorXd>& w, double grad_margin,
              ModelGrads* grads, Eigen::Ref<Eigen::VectorXd> grad_w);

/// Mean loss over `records` at the current parameters, with gradients
/// accumulated into `grads` (user columns looked up in the weight table).
/// Records are canonicalized by label before the loss.
double batch_loss_and_gradient(const PalModel& model, const EmbeddingCache& cache,
                               std::span<const ComparisonRecord> records, Loss loss,
                               Mode mode, Rng* rng, ModelGrads* grads);

/// Flat views over every trainable tensor with matching gradient buffers.
/// Network tensors come first ("f.*", "g<k>.*"), then "prototypes", then
/// "weights".
std::vector<ParamSlot> parameter_slots(PalModel& model, ModelGrads& grads);

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_accuracy = std::numeric_limits<double>::quiet_NaN();
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;
  std::int64_t steps = 0;
  // Worst simplex violation of any weight column observed after any step.
  double max_weight_sum_error = 0.0;
  double min_weight_entry = std::numeric_limits<double>::infinity();

  /// Columns: epoch,train_loss,train_acc,val_acc (val_acc empty when not
  /// evaluated); values printed with 17 significant digits.
  std::string to_csv() const;
};

struct TrainResult {
  PalModel model;
  TrainHistory history;
};

/// Minibatch Adam with simplex projection of every weight column after each
/// step; see TrainConfig for learning-rate groups.
TrainResult train(PalModel model, const PreferenceDataset& train_ds,
                  const PreferenceDataset* val_ds, const TrainConfig& config);

struct LocalizeResult {
  Eigen::VectorXd weights;
  bool zero_shot_fallback = false;
  TrainHistory history;
};

/// Fits only a new user's weights against a frozen model, starting from the
/// uniform vector. Empty `records` fall back to zero_shot_weights.
LocalizeResult localize_user(const PalModel& frozen, const PreferenceDataset& ds,
                             std::span<const ComparisonRecord> records,
                             const TrainConfig& config);
LocalizeResult localize_user(const PalModel& frozen, const EmbeddingCache& cache,
                             std::span<const ComparisonRecord> records,
                             const TrainConfig& config);

/// Mean of the weight-table columns (restricted to `users` when given).
Eigen::VectorXd zero_shot_weights(const UserWeightTable& table);
Eigen::VectorXd zero_shot_weights(const UserWeightTable& table,
                                  const std::vector<std::string>& users);

}  // namespace pal

#endif  // PAL_TRAINER_HPP_
