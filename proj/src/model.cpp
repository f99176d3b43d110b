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

#include "pal/model.hpp"

#include <cmath>

#include "pal/errors.hpp"

namespace pal {
namespace {

double checked_norm(const Eigen::VectorXd& v, const char* what) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n))
    throw NumericError(std::string("degenerate direction: ") + what +
                       " has zero or non-finite norm");
  return n;
}

void build_input_a(const PalModel& model, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const std::optional<Eigen::Ref<const Eigen::VectorXd>>& ctx,
                   Eigen::VectorXd& out) {
  if (x.size() != model.item_dim)
    throw ShapeError("item has dimension " + std::to_string(x.size()) +
                     ", model expects " + std::to_string(model.item_dim));
  if (model.context_dim == 0) {
    if (ctx) throw ShapeError("record has a context but the model takes none");
    out = x;
    return;
  }
  out.resize(model.item_dim + model.context_dim);
  out.head(model.item_dim) = x;
  if (ctx) {
    if (ctx->size() != model.context_dim)
      throw ShapeError("context has dimension " + std::to_string(ctx->size()) +
                       ", model expects " + std::to_string(model.context_dim));
    out.tail(model.context_dim) = *ctx;
  } else {
    out.tail(model.context_dim).setZero();
  }
}

}  // namespace

std::string_view to_string(Variant v) { return v == Variant::kA ? "A" : "B"; }

Variant parse_variant(std::string_view text) {
  if (text == "A" || text == "a") return Variant::kA;
  if (text == "B" || text == "b") return Variant::kB;
  throw ConfigError("unknown model variant '" + std::string(text) + "'");
}

UserWeightTable::UserWeightTable(Eigen::MatrixXd weights,
                                 std::vector<std::string> users)
    : weights_(std::move(weights)), users_(std::move(users)) {
  if (static_cast<std::size_t>(weights_.cols()) != users_.size())
    throw ShapeError("weight table has " + std::to_string(weights_.cols()) +
                     " columns for " + std::to_string(users_.size()) + " users");
  for (std::size_t i = 0; i < users_.size(); ++i) {
    if (!index_.emplace(users_[i], static_cast<Eigen::Index>(i)).second)
      throw ValidationError("duplicate user '" + users_[i] + "' in weight table");
  }
}

std::optional<Eigen::Index> UserWeightTable::column_of(std::string_view user) const {
  auto it = index_.find(std::string(user));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void UserWeightTable::validate(double tol) const {
  for (Eigen::Index c = 0; c < weights_.cols(); ++c) {
    const auto col = weights_.col(c);
    if (!col.allFinite() || col.minCoeff() < 0.0 || std::abs(col.sum() - 1.0) > tol)
      throw ValidationError("weight column for user '" + users_[c] +
                            "' is not on the simplex");
  }
}

int PalModel::num_prototypes() const {
  return variant == Variant::kA ? static_cast<int>(prototypes.cols())
                                : static_cast<int>(g.size());
}

void PalModel::validate() const {
  f.validate();
  if (item_dim < 1) throw ShapeError("model item_dim must be >= 1");
  if (variant == Variant::kA) {
    if (prototypes.cols() < 1) throw ShapeError("Model A needs K >= 1 prototypes");
    if (prototypes.rows() != item_dim + context_dim)
      throw ShapeError("Model A prototypes must live in the input space of f");
    if (f.input_dim() != item_dim + context_dim)
      throw ShapeError("Model A f must take item_dim + context_dim inputs");
    if (!prototypes.allFinite()) throw ValidationError("non-finite prototype");
  } else {
    if (g.empty()) throw ShapeError("Model B needs K >= 1 prototype functions");
    if (context_dim < 1) throw ShapeError("Model B needs contexts");
    if (f.input_dim() != item_dim) throw ShapeError("Model B f must take items");
    for (const auto& gk : g) {
      gk.validate();
      if (gk.input_dim() != context_dim || gk.output_dim() != f.output_dim())
        throw ShapeError("Model B prototype functions must map contexts to the "
                         "latent space of f");
    }
  }
  if (weights.num_prototypes() != num_prototypes())
    throw ShapeError("weight table rows must equal the prototype count");
  weights.validate();
}

PalModel make_model(const ModelSpec& spec, int item_dim, int context_dim,
                    const std::vector<std::string>& users, Rng& rng) {
  if (spec.num_prototypes < 1) throw ConfigError("num_prototypes must be >= 1");
  PalModel model;
  model.variant = spec.variant;
  model.item_dim = item_dim;
  model.flip_b_order = spec.flip_b_order;
  const int k = spec.num_prototypes;
  MlpSpec fspec = spec.f;
  if (fspec.output_dim <= 0)
    fspec.output_dim = spec.variant == Variant::kA ? item_dim + context_dim : item_dim;
  if (spec.variant == Variant::kA) {
    model.context_dim = context_dim;
    const int ambient = item_dim + context_dim;
    model.f = make_mlp(fspec, ambient, rng);
    model.prototypes.resize(ambient, k);
    const double stddev = 1.0 / std::sqrt(static_cast<double>(ambient));
    for (int c = 0; c < k; ++c)
      for (int r = 0; r < ambient; ++r) model.prototypes(r, c) = rng.normal(0.0, stddev);
  } else {
    if (context_dim < 1) throw ConfigError("Model B requires context embeddings");
    model.context_dim = context_dim;
    model.f = make_mlp(fspec, item_dim, rng);
    MlpSpec gspec = spec.g;
    gspec.output_dim = model.f.output_dim();
    for (int i = 0; i < k; ++i) model.g.push_back(make_mlp(gspec, context_dim, rng));
  }
  Eigen::MatrixXd w(k, static_cast<Eigen::Index>(users.size()));
  for (Eigen::Index c = 0; c < w.cols(); ++c) {
    const auto col = rng.dirichlet_uniform(static_cast<std::size_t>(k));
    for (int r = 0; r < k; ++r) w(r, c) = col[r];
  }
  model.weights = UserWeightTable(std::move(w), users);
  model.validate();
  return model;
}

EmbeddingCache::EmbeddingCache(const PreferenceDataset& ds)
    : items_(ds.items.to_columns()) {
  if (ds.contexts) contexts_ = ds.contexts->to_columns();
}

RecordInputs EmbeddingCache::inputs(const ComparisonRecord& rec) const {
  RecordInputs in{items_.col(rec.left), items_.col(rec.right), std::nullopt};
  if (rec.context) in.context.emplace(contexts_->col(*rec.context));
  return in;
}

Eigen::VectorXd ideal_point_a(const Eigen::MatrixXd& prototypes,
                              const Eigen::Ref<const Eigen::VectorXd>& w) {
  if (w.size() != prototypes.cols())
    throw ShapeError("weight vector length does not match prototype count");
  return prototypes * w;
}

Eigen::VectorXd ideal_point_b(const std::vector<MlpParams>& g,
                              const Eigen::Ref<const Eigen::VectorXd>& w,
                              const Eigen::Ref<const Eigen::VectorXd>& context,
                              Mode mode, Rng* rng) {
  if (static_cast<std::size_t>(w.size()) != g.size())
    throw ShapeError("weight vector length does not match prototype count");
  Eigen::VectorXd z = Eigen::VectorXd::Zero(g.front().output_dim());
  for (std::size_t k = 0; k < g.size(); ++k)
    z += w[static_cast<Eigen::Index>(k)] * mlp_forward(g[k], context, mode, rng);
  return z / checked_norm(z, "prototype mixture z(x_c)");
}

double margin_for_weights(const PalModel& model,
                          const Eigen::Ref<const Eigen::VectorXd>& w,
                          const RecordInputs& in, Mode mode, Rng* rng,
                          MarginPass* pass) {
  MarginPass local;
  MarginPass& p = pass != nullptr ? *pass : local;
  if (w.size() != model.num_prototypes())
    throw ShapeError("weight vector length does not match prototype count");
  if (model.variant == Variant::kA) {
    build_input_a(model, in.left, in.context, p.input_left);
    build_input_a(model, in.right, in.context, p.input_right);
    p.ideal.noalias() = model.prototypes * w;
    p.out_left = mlp_forward(model.f, p.input_left, mode, rng, &p.cache_left);
    p.out_right = mlp_forward(model.f, p.input_right, mode, rng, &p.cache_right);
    p.out_ideal = mlp_forward(model.f, p.ideal, mode, rng, &p.cache_ideal);
    const double dr = (p.out_right - p.out_ideal).squaredNorm();
    const double dl = (p.out_left - p.out_ideal).squaredNorm();
    p.margin = dr - dl;
    return p.margin;
  }
  if (!in.context)
    throw ValidationError("Model B needs a context embedding for every record");
  const Eigen::Index k_count = w.size();
  p.proto_out.resize(static_cast<std::size_t>(k_count));
  p.proto_cache.resize(static_cast<std::size_t>(k_count));
  p.direction = Eigen::VectorXd::Zero(model.f.output_dim());
  for (Eigen::Index k = 0; k < k_count; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    p.proto_out[ks] = mlp_forward(model.g[ks], *in.context, mode, rng, &p.proto_cache[ks]);
    p.direction += w[k] * p.proto_out[ks];
  }
  p.direction_norm = checked_norm(p.direction, "prototype mixture z(x_c)");
  p.unit_direction = p.direction / p.direction_norm;
  p.out_left = mlp_forward(model.f, in.left, mode, rng, &p.cache_left);
  p.out_right = mlp_forward(model.f, in.right, mode, rng, &p.cache_right);
  p.norm_left = checked_norm(p.out_left, "f(x_l)");
  p.norm_right = checked_norm(p.out_right, "f(x_r)");
  p.unit_left = p.out_left / p.norm_left;
  p.unit_right = p.out_right / p.norm_right;
  const double sl = p.unit_left.dot(p.unit_direction);
  const double sr = p.unit_right.dot(p.unit_direction);
  p.margin = model.flip_b_order ? sr - sl : sl - sr;
  return p.margin;
}

double margin(const PalModel& model, const PreferenceDataset& ds,
              const ComparisonRecord& rec, Mode mode, Rng* rng) {
  const auto col = model.weights.column_of(rec.user_id);
  if (!col) throw ValidationError("user '" + rec.user_id + "' has no weight column");
  auto to_vec = [](std::span<const float> row) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(row.size()));
    for (std::size_t i = 0; i < row.size(); ++i) v[static_cast<Eigen::Index>(i)] = row[i];
    return v;
  };
  const Eigen::VectorXd xl = to_vec(ds.items.row(rec.left));
  const Eigen::VectorXd xr = to_vec(ds.items.row(rec.right));
  Eigen::VectorXd xc;
  RecordInputs in{xl, xr, std::nullopt};
  if (rec.context) {
    if (!ds.contexts) throw ValidationError("record references a missing context");
    xc = to_vec(ds.contexts->row(*rec.context));
    in.context.emplace(xc);
  }
  return margin_for_weights(model, model.weights.matrix().col(*col), in, mode, rng);
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double preference_probability(double margin_value) { return sigmoid(margin_value); }

}  // namespace pal
