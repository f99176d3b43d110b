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

#include "pal/mlp.hpp"

#include <cmath>
#include <string>

#include "pal/errors.hpp"

namespace pal {

std::string_view to_string(Activation a) {
  return a == Activation::kRelu ? "relu" : "identity";
}

Activation parse_activation(std::string_view text) {
  if (text == "relu") return Activation::kRelu;
  if (text == "identity") return Activation::kIdentity;
  throw ConfigError("unknown activation '" + std::string(text) + "'");
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers)
    n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

void MlpParams::validate() const {
  if (layers.empty()) throw ShapeError("MLP has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.weight.rows() == 0 || l.weight.cols() == 0)
      throw ShapeError("MLP layer " + std::to_string(i) + " is empty");
    if (l.has_bias() && l.bias.size() != l.weight.rows())
      throw ShapeError("MLP layer " + std::to_string(i) + " bias size mismatch");
    if (i > 0 && layers[i - 1].weight.rows() != l.weight.cols())
      throw ShapeError("MLP layer " + std::to_string(i) +
                       " input does not chain with previous output");
  }
  if (residual && input_dim() != output_dim())
    throw ShapeError("residual MLP needs input_dim == output_dim");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
    throw ConfigError("dropout rate must lie in [0, 1)");
}

MlpParams make_mlp(const MlpSpec& spec, int input_dim, Rng& rng) {
  MlpParams params;
  params.activation = spec.activation;
  params.activate_output = spec.activate_output;
  params.residual = spec.residual;
  params.dropout_rate = spec.dropout_rate;
  std::vector<int> widths = spec.hidden;
  widths.push_back(spec.output_dim);
  int fan_in = input_dim;
  for (int width : widths) {
    if (width < 1) throw ConfigError("MLP layer width must be >= 1");
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    DenseLayer layer;
    layer.weight.resize(width, fan_in);
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
        layer.weight(r, c) = rng.uniform(-bound, bound);
    if (spec.bias) {
      layer.bias.resize(width);
      for (Eigen::Index r = 0; r < layer.bias.size(); ++r)
        layer.bias[r] = rng.uniform(-bound, bound);
    }
    params.layers.push_back(std::move(layer));
    fan_in = width;
  }
  params.validate();
  return params;
}

MlpParams linear_mlp(const Eigen::MatrixXd& weight) {
  MlpParams params;
  params.layers.push_back({weight, Eigen::VectorXd()});
  params.validate();
  return params;
}

MlpGrads MlpGrads::zeros_like(const MlpParams& params) {
  MlpGrads g;
  for (const auto& l : params.layers) {
    g.weight.push_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
    g.bias.push_back(Eigen::VectorXd::Zero(l.bias.size()));
  }
  return g;
}

void MlpGrads::set_zero() {
  for (auto& w : weight) w.setZero();
  for (auto& b : bias) b.setZero();
}

bool MlpGrads::all_finite() const {
  for (const auto& w : weight)
    if (!w.allFinite()) return false;
  for (const auto& b : bias)
    if (!b.allFinite()) return false;
  return true;
}

Eigen::VectorXd mlp_forward(const MlpParams& params,
                            const Eigen::Ref<const Eigen::VectorXd>& x, Mode mode,
                            Rng* rng, MlpCache* cache) {
  if (x.size() != params.input_dim())
    throw ShapeError("MLP input has size " + std::to_string(x.size()) +
                     ", expected " + std::to_string(params.input_dim()));
  const std::size_t n_layers = params.layers.size();
  const bool use_dropout = mode == Mode::kTrain && params.dropout_rate > 0.0;
  if (use_dropout && rng == nullptr)
    throw ConfigError("train-mode dropout needs a random generator");
  if (cache != nullptr) {
    cache->input = x;
    cache->pre.resize(n_layers);
    cache->post.resize(n_layers);
    cache->mask.resize(n_layers);
  }
  Eigen::VectorXd h = x;
  Eigen::VectorXd pre;
  for (std::size_t i = 0; i < n_layers; ++i) {
    const auto& layer = params.layers[i];
    pre.noalias() = layer.weight * h;
    if (layer.has_bias()) pre += layer.bias;
    const bool hidden = i + 1 < n_layers;
    h = pre;
    if ((hidden || params.activate_output) && params.activation == Activation::kRelu)
      h = h.cwiseMax(0.0);
    Eigen::VectorXd* mask = cache != nullptr ? &cache->mask[i] : nullptr;
    if (hidden && use_dropout) {
      const double keep_scale = 1.0 / (1.0 - params.dropout_rate);
      Eigen::VectorXd m(h.size());
      for (Eigen::Index j = 0; j < m.size(); ++j)
        m[j] = rng->uniform() < params.dropout_rate ? 0.0 : keep_scale;
      h = h.cwiseProduct(m);
      if (mask != nullptr) *mask = std::move(m);
    } else if (mask != nullptr) {
      mask->resize(0);
    }
    if (cache != nullptr) {
      cache->pre[i] = pre;
      cache->post[i] = h;
    }
  }
  if (params.residual) h += x;
  return h;
}

void mlp_backward(const MlpParams& params, const MlpCache& cache,
                  const Eigen::VectorXd& grad_output, MlpGrads* grads,
                  Eigen::VectorXd* grad_input) {
  const std::size_t n_layers = params.layers.size();
  Eigen::VectorXd g = grad_output;
  for (std::size_t idx = n_layers; idx-- > 0;) {
    const auto& layer = params.layers[idx];
    const bool hidden = idx + 1 < n_layers;
    if (cache.mask[idx].size() > 0) g = g.cwiseProduct(cache.mask[idx]);
    if ((hidden || params.activate_output) && params.activation == Activation::kRelu) {
      for (Eigen::Index j = 0; j < g.size(); ++j)
        if (cache.pre[idx][j] <= 0.0) g[j] = 0.0;
    }
    const Eigen::VectorXd& below = idx == 0 ? cache.input : cache.post[idx - 1];
    if (grads != nullptr) {
      grads->weight[idx].noalias() += g * below.transpose();
      if (layer.has_bias()) grads->bias[idx] += g;
    }
    if (idx > 0 || grad_input != nullptr) {
      Eigen::VectorXd next;
      next.noalias() = layer.weight.transpose() * g;
      g = std::move(next);
    }
  }
  if (grad_input != nullptr) {
    *grad_input = g;
    if (params.residual) *grad_input += grad_output;
  }
}

}  // namespace pal
