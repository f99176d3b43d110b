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

// Small fully connected networks with manual backpropagation.

#ifndef PAL_MLP_HPP_
#define PAL_MLP_HPP_

#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "pal/rng.hpp"

namespace pal {

enum class Activation { kIdentity, kRelu };
enum class Mode { kTrain, kEval };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view text);

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // empty when the layer has no bias
  bool has_bias() const { return bias.size() > 0; }
};

/// Affine layers chained with `activation` between them. The activation is
/// also applied after the last layer when `activate_output` is set. Dropout
/// acts on hidden activations only; `residual` adds the input to the output.
struct MlpParams {
  std::vector<DenseLayer> layers;
  Activation activation = Activation::kIdentity;
  bool activate_output = false;
  bool residual = false;
  double dropout_rate = 0.0;

  int input_dim() const { return static_cast<int>(layers.front().weight.cols()); }
  int output_dim() const { return static_cast<int>(layers.back().weight.rows()); }
  std::size_t parameter_count() const;
  /// Throws ShapeError / ConfigError.
  void validate() const;
};

/// Architecture description used to initialize fresh networks.
struct MlpSpec {
  std::vector<int> hidden;  // widths of hidden layers
  int output_dim = 0;
  Activation activation = Activation::kIdentity;
  bool bias = false;
  bool residual = false;
  bool activate_output = false;
  double dropout_rate = 0.0;
};

/// Weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
MlpParams make_mlp(const MlpSpec& spec, int input_dim, Rng& rng);

/// Single bias-free linear layer with the given weight.
MlpParams linear_mlp(const Eigen::MatrixXd& weight);

struct MlpCache {
  Eigen::VectorXd input;
  std::vector<Eigen::VectorXd> pre;   // per layer, before activation
  std::vector<Eigen::VectorXd> post;  // per layer, after activation/dropout
  std::vector<Eigen::VectorXd> mask;  // per layer dropout scale; empty if none
};

struct MlpGrads {
  std::vector<Eigen::MatrixXd> weight;
  std::vector<Eigen::VectorXd> bias;

  static MlpGrads zeros_like(const MlpParams& params);
  void set_zero();
  bool all_finite() const;
};

/// In kTrain mode with dropout_rate > 0, `rng` must be non-null.
Eigen::VectorXd mlp_forward(const MlpParams& params,
                            const Eigen::Ref<const Eigen::VectorXd>& x, Mode mode,
                            Rng* rng = nullptr, MlpCache* cache = nullptr);

/// Accumulates d(loss)/d(params) into `grads` (if non-null) and writes
/// d(loss)/d(input) into `grad_input` (if non-null).
void mlp_backward(const MlpParams& params, const MlpCache& cache,
                  const Eigen::VectorXd& grad_output, MlpGrads* grads,
                  Eigen::VectorXd* grad_input);

}  // namespace pal

#endif  // PAL_MLP_HPP_
