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

#include "pal/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "pal/errors.hpp"
#include "pal/evaluator.hpp"
#include "pal/simplex.hpp"

namespace pal {
namespace {

constexpr std::uint64_t kStreamShuffle = 11;
constexpr std::uint64_t kStreamDropout = 12;

// d(normalize(u))^T g expressed in terms of u: (g - u_hat (u_hat . g)) / |u|.
Eigen::VectorXd normalize_backward(const Eigen::VectorXd& unit, double norm,
                                   const Eigen::VectorXd& grad_unit) {
  return (grad_unit - unit * unit.dot(grad_unit)) / norm;
}

std::vector<Eigen::Index> weight_columns(const PalModel& model,
                                         std::span<const ComparisonRecord> records) {
  std::vector<Eigen::Index> cols;
  cols.reserve(records.size());
  for (const auto& rec : records) {
    const auto col = model.weights.column_of(rec.user_id);
    if (!col)
      throw ValidationError("user '" + rec.user_id +
                            "' appears in the data but not in the weight table");
    cols.push_back(*col);
  }
  return cols;
}

struct BatchTally {
  double loss_sum = 0.0;
  double correct = 0.0;
};

// Runs records[order[begin..end)] through forward/backward. Gradients are
// scaled by 1/(end - begin) so they belong to the mean loss.
BatchTally run_batch(const PalModel& model, const EmbeddingCache& cache,
                     std::span<const ComparisonRecord> records,
                     std::span<const Eigen::Index> columns,
                     std::span<const std::size_t> order, Loss loss, Mode mode,
                     Rng* rng, ModelGrads* grads, MarginPass& pass) {
  BatchTally tally;
  const double scale = 1.0 / static_cast<double>(order.size());
  Eigen::VectorXd scratch_w(model.num_prototypes());
  for (std::size_t idx : order) {
    const auto& rec = records[idx];
    const Eigen::Index col = columns[idx];
    const auto w = model.weights.matrix().col(col);
    const double m = margin_for_weights(model, w, cache.inputs(rec), mode, rng, &pass);
    const double preferred = rec.label * m;
    tally.loss_sum += loss_value(loss, preferred);
    tally.correct += preferred > 0.0 ? 1.0 : (preferred == 0.0 ? 0.5 : 0.0);
    if (grads != nullptr) {
      const double dm = rec.label * loss_derivative(loss, preferred) * scale;
      if (dm != 0.0) backward(model, pass, w, dm, grads, grads->weights.col(col));
    }
  }
  return tally;
}

void check_finite(const std::vector<ParamSlot>& slots) {
  for (const auto& s : slots)
    for (double g : s.grad)
      if (!std::isfinite(g)) throw NumericError("non-finite gradient in '" + s.name + "'");
}

void record_simplex(const Eigen::MatrixXd& w, TrainHistory& h) {
  if (w.size() == 0) return;
  h.max_weight_sum_error = std::max(h.max_weight_sum_error, max_simplex_sum_error(w));
  h.min_weight_entry = std::min(h.min_weight_entry, w.minCoeff());
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr_f > 0.0) || !(lr_proto_weights > 0.0))
    throw ConfigError("learning rates must be > 0");
  if (!(weight_decay_f >= 0.0)) throw ConfigError("weight decay must be >= 0");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
}

ModelGrads ModelGrads::zeros_like(const PalModel& model) {
  ModelGrads g;
  g.f = MlpGrads::zeros_like(model.f);
  g.prototypes = Eigen::MatrixXd::Zero(model.prototypes.rows(), model.prototypes.cols());
  for (const auto& gk : model.g) g.g.push_back(MlpGrads::zeros_like(gk));
  g.weights = Eigen::MatrixXd::Zero(model.weights.num_prototypes(),
                                    model.weights.num_users());
  return g;
}

void ModelGrads::set_zero() {
  f.set_zero();
  prototypes.setZero();
  for (auto& gk : g) gk.set_zero();
  weights.setZero();
}

void backward(const PalModel& model, const MarginPass& pass,
              const Eigen::Ref<const Eigen::VectorXd>& w, double grad_margin,
              ModelGrads* grads, Eigen::Ref<Eigen::VectorXd> grad_w) {
  MlpGrads* f_grads = grads != nullptr ? &grads->f : nullptr;
  if (model.variant == Variant::kA) {
    // margin = |u_r - v|^2 - |u_l - v|^2 with u = f(x), v = f(a).
    const Eigen::VectorXd right_diff = pass.out_right - pass.out_ideal;
    const Eigen::VectorXd left_diff = pass.out_left - pass.out_ideal;
    if (f_grads != nullptr) {
      mlp_backward(model.f, pass.cache_right, (2.0 * grad_margin) * right_diff, f_grads,
                   nullptr);
      mlp_backward(model.f, pass.cache_left, (-2.0 * grad_margin) * left_diff, f_grads,
                   nullptr);
    }
    const Eigen::VectorXd grad_ideal_out =
        (2.0 * grad_margin) * (pass.out_left - pass.out_right);
    Eigen::VectorXd grad_ideal;
    mlp_backward(model.f, pass.cache_ideal, grad_ideal_out, f_grads, &grad_ideal);
    if (grads != nullptr) grads->prototypes.noalias() += grad_ideal * w.transpose();
    grad_w.noalias() += model.prototypes.transpose() * grad_ideal;
    return;
  }
  const double sign = model.flip_b_order ? -1.0 : 1.0;
  const double gm = sign * grad_margin;
  if (f_grads != nullptr) {
    const Eigen::VectorXd gl = normalize_backward(pass.unit_left, pass.norm_left,
                                                  gm * pass.unit_direction);
    const Eigen::VectorXd gr = normalize_backward(pass.unit_right, pass.norm_right,
                                                  -gm * pass.unit_direction);
    mlp_backward(model.f, pass.cache_left, gl, f_grads, nullptr);
    mlp_backward(model.f, pass.cache_right, gr, f_grads, nullptr);
  }
  const Eigen::VectorXd grad_unit_dir = gm * (pass.unit_left - pass.unit_right);
  const Eigen::VectorXd grad_dir =
      normalize_backward(pass.unit_direction, pass.direction_norm, grad_unit_dir);
  for (std::size_t k = 0; k < model.g.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    grad_w[kk] += pass.proto_out[k].dot(grad_dir);
    if (grads != nullptr)
      mlp_backward(model.g[k], pass.proto_cache[k], w[kk] * grad_dir, &grads->g[k],
                   nullptr);
  }
}

double batch_loss_and_gradient(const PalModel& model, const EmbeddingCache& cache,
                               std::span<const ComparisonRecord> records, Loss loss,
                               Mode mode, Rng* rng, ModelGrads* grads) {
  if (records.empty()) throw ValidationError("empty minibatch");
  const auto columns = weight_columns(model, records);
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  MarginPass pass;
  const BatchTally t =
      run_batch(model, cache, records, columns, order, loss, mode, rng, grads, pass);
  return t.loss_sum / static_cast<double>(records.size());
}

std::vector<ParamSlot> parameter_slots(PalModel& model, ModelGrads& grads) {
  std::vector<ParamSlot> slots;
  auto add_mlp = [&](MlpParams& p, MlpGrads& g, const std::string& name) {
    for (std::size_t i = 0; i < p.layers.size(); ++i) {
      auto& l = p.layers[i];
      const std::string base = name + ".layers[" + std::to_string(i) + "]";
      slots.push_back({base + ".weight",
                       {l.weight.data(), static_cast<std::size_t>(l.weight.size())},
                       {g.weight[i].data(), static_cast<std::size_t>(g.weight[i].size())},
                       true});
      if (l.has_bias())
        slots.push_back({base + ".bias",
                         {l.bias.data(), static_cast<std::size_t>(l.bias.size())},
                         {g.bias[i].data(), static_cast<std::size_t>(g.bias[i].size())},
                         true});
    }
  };
  add_mlp(model.f, grads.f, "f");
  for (std::size_t k = 0; k < model.g.size(); ++k)
    add_mlp(model.g[k], grads.g[k], "g" + std::to_string(k));
  if (model.variant == Variant::kA)
    slots.push_back({"prototypes",
                     {model.prototypes.data(), static_cast<std::size_t>(model.prototypes.size())},
                     {grads.prototypes.data(), static_cast<std::size_t>(grads.prototypes.size())},
                     false});
  auto& w = model.weights.matrix();
  slots.push_back({"weights",
                   {w.data(), static_cast<std::size_t>(w.size())},
                   {grads.weights.data(), static_cast<std::size_t>(grads.weights.size())},
                   false});
  return slots;
}

std::string TrainHistory::to_csv() const {
  std::ostringstream os;
  os << "epoch,train_loss,train_acc,val_acc\n";
  for (const auto& e : epochs) {
    os << e.epoch << ',' << fmt17(e.train_loss) << ',' << fmt17(e.train_accuracy) << ',';
    if (!std::isnan(e.val_accuracy)) os << fmt17(e.val_accuracy);
    os << '\n';
  }
  return os.str();
}

TrainResult train(PalModel model, const PreferenceDataset& train_ds,
                  const PreferenceDataset* val_ds, const TrainConfig& config) {
  config.validate();
  model.validate();
  if (train_ds.comparisons.empty()) throw ValidationError("empty training set");
  const std::span<const ComparisonRecord> records(train_ds.comparisons);
  const auto columns = weight_columns(model, records);
  const EmbeddingCache cache(train_ds);
  std::optional<EmbeddingCache> val_cache;
  if (val_ds != nullptr) val_cache.emplace(*val_ds);

  Rng shuffle_rng(derive_seed(config.seed, kStreamShuffle));
  Rng dropout_rng(derive_seed(config.seed, kStreamDropout));
  ModelGrads grads = ModelGrads::zeros_like(model);
  std::vector<ParamSlot> slots = parameter_slots(model, grads);
  std::vector<ParamSlot> network_slots, proto_slots;
  for (auto& s : slots) (s.decay ? network_slots : proto_slots).push_back(s);
  AdamState network_state, proto_state;

  TrainResult best{model, {}};
  double best_val = -1.0;
  TrainHistory history;
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  MarginPass pass;
  const auto batch = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    BatchTally epoch_tally;
    for (std::size_t begin = 0; begin < order.size(); begin += batch) {
      const std::size_t end = std::min(order.size(), begin + batch);
      grads.set_zero();
      const BatchTally t =
          run_batch(model, cache, records, columns,
                    std::span<const std::size_t>(order).subspan(begin, end - begin),
                    config.loss, Mode::kTrain, &dropout_rng, &grads, pass);
      epoch_tally.loss_sum += t.loss_sum;
      epoch_tally.correct += t.correct;
      check_finite(slots);
      if (!network_slots.empty())
        adam_step(network_state, network_slots, config.lr_f, config.weight_decay_f);
      adam_step(proto_state, proto_slots, config.lr_proto_weights, 0.0);
      project_columns(model.weights.matrix());
      record_simplex(model.weights.matrix(), history);
      ++history.steps;
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = epoch_tally.loss_sum / static_cast<double>(records.size());
    stats.train_accuracy = epoch_tally.correct / static_cast<double>(records.size());
    if (val_ds != nullptr && !val_ds->comparisons.empty() &&
        (epoch % config.eval_every == 0 || epoch == config.epochs)) {
      stats.val_accuracy =
          score_records(model, *val_cache, val_ds->comparisons, WeightSource::table())
              .fraction();
      if (config.keep_best_on_val && stats.val_accuracy > best_val) {
        best_val = stats.val_accuracy;
        best.model = model;
        history.best_epoch = epoch;
      }
    }
    history.epochs.push_back(stats);
  }
  if (!config.keep_best_on_val || history.best_epoch < 0) {
    best.model = std::move(model);
    history.best_epoch = config.epochs;
  }
  best.history = std::move(history);
  return best;
}

LocalizeResult localize_user(const PalModel& frozen, const PreferenceDataset& ds,
                             std::span<const ComparisonRecord> records,
                             const TrainConfig& config) {
  return localize_user(frozen, EmbeddingCache(ds), records, config);
}

LocalizeResult localize_user(const PalModel& frozen, const EmbeddingCache& cache,
                             std::span<const ComparisonRecord> records,
                             const TrainConfig& config) {
  config.validate();
  const int k = frozen.num_prototypes();
  LocalizeResult result;
  if (k == 1) {
    result.weights = Eigen::VectorXd::Ones(1);
    return result;
  }
  if (records.empty()) {
    result.weights = zero_shot_weights(frozen.weights);
    result.zero_shot_fallback = true;
    return result;
  }
  for (const auto& rec : records)
    if (rec.user_id != records.front().user_id)
      throw ValidationError("localize_user received records from several users");

  const Mode mode = config.localize_with_dropout ? Mode::kTrain : Mode::kEval;
  Rng shuffle_rng(derive_seed(config.seed, kStreamShuffle));
  Rng dropout_rng(derive_seed(config.seed, kStreamDropout));
  Eigen::VectorXd w = Eigen::VectorXd::Constant(k, 1.0 / k);
  Eigen::VectorXd grad_w(k);
  AdamState state;
  MarginPass pass;
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  const auto batch = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    BatchTally tally;
    for (std::size_t begin = 0; begin < order.size(); begin += batch) {
      const std::size_t end = std::min(order.size(), begin + batch);
      const double scale = 1.0 / static_cast<double>(end - begin);
      grad_w.setZero();
      for (std::size_t i = begin; i < end; ++i) {
        const auto& rec = records[order[i]];
        const double m =
            margin_for_weights(frozen, w, cache.inputs(rec), mode, &dropout_rng, &pass);
        const double preferred = rec.label * m;
        tally.loss_sum += loss_value(config.loss, preferred);
        tally.correct += preferred > 0.0 ? 1.0 : (preferred == 0.0 ? 0.5 : 0.0);
        const double dm = rec.label * loss_derivative(config.loss, preferred) * scale;
        if (dm != 0.0) backward(frozen, pass, w, dm, nullptr, grad_w);
      }
      if (!grad_w.allFinite()) throw NumericError("non-finite gradient in 'weights'");
      const ParamSlot slot{"weights", {w.data(), static_cast<std::size_t>(w.size())},
                           {grad_w.data(), static_cast<std::size_t>(grad_w.size())},
                           false};
      adam_step(state, std::span<const ParamSlot>(&slot, 1), config.lr_proto_weights,
                0.0);
      w = project_simplex(w);
      record_simplex(w, result.history);
      ++result.history.steps;
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = tally.loss_sum / static_cast<double>(records.size());
    stats.train_accuracy = tally.correct / static_cast<double>(records.size());
    result.history.epochs.push_back(stats);
  }
  result.history.best_epoch = config.epochs;
  result.weights = std::move(w);
  return result;
}

Eigen::VectorXd zero_shot_weights(const UserWeightTable& table) {
  if (table.num_users() == 0)
    throw ValidationError("zero-shot weights need at least one seen user");
  return table.matrix().rowwise().mean();
}

Eigen::VectorXd zero_shot_weights(const UserWeightTable& table,
                                  const std::vector<std::string>& users) {
  if (users.empty()) throw ValidationError("zero-shot weights need at least one seen user");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(table.num_prototypes());
  for (const auto& u : users) {
    const auto col = table.column_of(u);
    if (!col) throw ValidationError("user '" + u + "' has no weight column");
    sum += table.matrix().col(*col);
  }
  return sum / static_cast<double>(users.size());
}

}  // namespace pal
