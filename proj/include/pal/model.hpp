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

// Mixture-of-prototypes ideal-point reward models.
//
// Model A: each user's ideal point is a = P w in the input space of f, and
//   margin = |f(x_r; x_c) - f(a)|^2 - |f(x_l; x_c) - f(a)|^2.
// Model B: each user's ideal direction is z = normalize(sum_k w_k g_k(x_c)),
//   margin = <normalize(f(x_l)), z> - <normalize(f(x_r)), z>.
// In both, a positive margin means the model prefers the left item and the
// reported preference probability is sigmoid(margin).

#ifndef PAL_MODEL_HPP_
#define PAL_MODEL_HPP_

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "pal/core_data.hpp"
#include "pal/mlp.hpp"
#include "pal/rng.hpp"

namespace pal {

enum class Variant { kA, kB };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view text);

/// K x N matrix of per-user simplex weights, one column per registered user.
class UserWeightTable {
 public:
  UserWeightTable() = default;
  UserWeightTable(Eigen::MatrixXd weights, std::vector<std::string> users);

  const Eigen::MatrixXd& matrix() const { return weights_; }
  Eigen::MatrixXd& matrix() { return weights_; }
  const std::vector<std::string>& users() const { return users_; }
  std::optional<Eigen::Index> column_of(std::string_view user) const;
  Eigen::Index num_prototypes() const { return weights_.rows(); }
  Eigen::Index num_users() const { return weights_.cols(); }

  /// Throws ValidationError naming the first column off the simplex.
  void validate(double tol = 1e-9) const;

 private:
  Eigen::MatrixXd weights_;
  std::vector<std::string> users_;
  std::unordered_map<std::string, Eigen::Index> index_;
};

struct PalModel {
  Variant variant = Variant::kA;
  int item_dim = 0;
  int context_dim = 0;  // 0 when the model consumes no contexts
  MlpParams f;
  Eigen::MatrixXd prototypes;  // Model A: (item_dim + context_dim) x K
  std::vector<MlpParams> g;    // Model B: K maps context_dim -> latent
  UserWeightTable weights;
  // Model B ablation: use the printed operand order <f(x_r),z> - <f(x_l),z>.
  bool flip_b_order = false;

  int num_prototypes() const;
  int latent_dim() const { return f.output_dim(); }
  void validate() const;
};

struct ModelSpec {
  Variant variant = Variant::kA;
  int num_prototypes = 1;
  MlpSpec f;  // output_dim <= 0 means the input dimension of f
  MlpSpec g;  // Model B only
  bool flip_b_order = false;
};

/// Fresh model: MLPs ~ U(+-1/sqrt(fan_in)); prototypes ~ N(0, I/dim);
/// weights ~ Dirichlet(1) per user.
PalModel make_model(const ModelSpec& spec, int item_dim, int context_dim,
                    const std::vector<std::string>& users, Rng& rng);

/// Embeddings of one record converted to double.
struct RecordInputs {
  Eigen::Ref<const Eigen::VectorXd> left;
  Eigen::Ref<const Eigen::VectorXd> right;
  std::optional<Eigen::Ref<const Eigen::VectorXd>> context;
};

/// Double-precision copies of a dataset's embeddings, one item per column.
class EmbeddingCache {
 public:
  explicit EmbeddingCache(const PreferenceDataset& ds);
  RecordInputs inputs(const ComparisonRecord& rec) const;
  bool has_contexts() const { return contexts_.has_value(); }
  int item_dim() const { return static_cast<int>(items_.rows()); }
  int context_dim() const { return contexts_ ? static_cast<int>(contexts_->rows()) : 0; }

 private:
  Eigen::MatrixXd items_;
  std::optional<Eigen::MatrixXd> contexts_;
};

/// Intermediate values of one margin evaluation, kept for backprop.
struct MarginPass {
  double margin = 0.0;
  // Model A
  Eigen::VectorXd input_left, input_right, ideal;
  Eigen::VectorXd out_left, out_right, out_ideal;
  MlpCache cache_left, cache_right, cache_ideal;
  // Model B
  Eigen::VectorXd unit_left, unit_right;  // normalized f outputs
  double norm_left = 0.0, norm_right = 0.0;
  std::vector<Eigen::VectorXd> proto_out;  // g_k(x_c)
  std::vector<MlpCache> proto_cache;
  Eigen::VectorXd direction;  // sum_k w_k g_k(x_c)
  Eigen::VectorXd unit_direction;
  double direction_norm = 0.0;
};

Eigen::VectorXd ideal_point_a(const Eigen::MatrixXd& prototypes,
                              const Eigen::Ref<const Eigen::VectorXd>& w);

/// Normalized mixture of prototype functions; throws NumericError when the
/// mixture has zero norm.
Eigen::VectorXd ideal_point_b(const std::vector<MlpParams>& g,
                              const Eigen::Ref<const Eigen::VectorXd>& w,
                              const Eigen::Ref<const Eigen::VectorXd>& context,
                              Mode mode, Rng* rng = nullptr);

/// Margin for an explicit weight vector. `pass` (optional) receives the
/// intermediate values needed by backward().
double margin_for_weights(const PalModel& model,
                          const Eigen::Ref<const Eigen::VectorXd>& w,
                          const RecordInputs& in, Mode mode, Rng* rng = nullptr,
                          MarginPass* pass = nullptr);

/// Margin for a registered user; throws ValidationError if unregistered.
double margin(const PalModel& model, const PreferenceDataset& ds,
              const ComparisonRecord& rec, Mode mode = Mode::kEval,
              Rng* rng = nullptr);

double sigmoid(double x);

/// Probability that the left item is preferred.
double preference_probability(double margin_value);

}  // namespace pal

#endif  // PAL_MODEL_HPP_
