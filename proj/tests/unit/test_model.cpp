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

#include <cmath>
#include <cstring>

#include "doctest.h"
#include "../support/random_world.hpp"
#include "../support/temp_dir.hpp"
#include "pal/checkpoint.hpp"
#include "pal/errors.hpp"
#include "pal/mlp.hpp"
#include "pal/model.hpp"

using namespace pal;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

PalModel identity_model_a(const MatrixXd& prototypes, int users = 1) {
  PalModel m;
  m.variant = Variant::kA;
  m.item_dim = static_cast<int>(prototypes.rows());
  m.f = linear_mlp(MatrixXd::Identity(m.item_dim, m.item_dim));
  m.prototypes = prototypes;
  std::vector<std::string> ids;
  for (int u = 0; u < users; ++u) ids.push_back("u" + std::to_string(u));
  m.weights = UserWeightTable(
      MatrixXd::Constant(prototypes.cols(), users, 1.0 / static_cast<double>(prototypes.cols())), ids);
  return m;
}

RecordInputs inputs(const VectorXd& l, const VectorXd& r) { return {l, r, std::nullopt}; }

}  // namespace

TEST_SUITE("mlp") {
  TEST_CASE("identity layer passes input through") {
    const MlpParams p = linear_mlp(MatrixXd::Identity(3, 3));
    const VectorXd x = vec({0.5, -2, 7});
    CHECK(mlp_forward(p, x, Mode::kEval) == x);
  }

  TEST_CASE("relu on the output clips negatives") {
    MlpParams p = linear_mlp(MatrixXd::Identity(2, 2));
    p.activation = Activation::kRelu;
    p.activate_output = true;
    CHECK(mlp_forward(p, vec({-1, 2}), Mode::kEval) == vec({0, 2}));
  }

  TEST_CASE("dropout is the identity in eval mode and rescales in train mode") {
    Rng rng(4);
    MlpSpec spec;
    spec.hidden = {50};
    spec.output_dim = 3;
    spec.activation = Activation::kRelu;
    spec.bias = true;
    spec.dropout_rate = 0.5;
    MlpParams p = make_mlp(spec, 3, rng);
    MlpParams plain = p;
    plain.dropout_rate = 0.0;
    const VectorXd x = vec({0.3, -0.1, 0.9});
    CHECK(mlp_forward(p, x, Mode::kEval) == mlp_forward(plain, x, Mode::kEval));
    MlpCache cache;
    Rng drop(1);
    mlp_forward(p, x, Mode::kTrain, &drop, &cache);
    REQUIRE(cache.mask.size() == 2);
    REQUIRE(cache.mask[0].size() == 50);
    int kept = 0;
    for (Eigen::Index i = 0; i < 50; ++i) {
      const double s = cache.mask[0][i];
      CHECK((s == 0.0 || s == 2.0));
      kept += s != 0.0;
    }
    CHECK(kept > 10);
    CHECK(kept < 40);
    CHECK(cache.mask[1].size() == 0);
  }

  TEST_CASE("residual adds the input") {
    MlpParams p = linear_mlp(2 * MatrixXd::Identity(2, 2));
    p.residual = true;
    CHECK(mlp_forward(p, vec({1, -3}), Mode::kEval) == vec({3, -9}));
  }

  TEST_CASE("shape and configuration errors") {
    const MlpParams p = linear_mlp(MatrixXd::Identity(2, 3));
    CHECK_THROWS_AS(mlp_forward(p, vec({1, 2}), Mode::kEval), ShapeError);
    MlpParams r = p;
    r.residual = true;
    CHECK_THROWS_AS(r.validate(), ShapeError);
    MlpParams d = linear_mlp(MatrixXd::Identity(2, 2));
    d.dropout_rate = 1.0;
    CHECK_THROWS_AS(d.validate(), ConfigError);
    MlpParams chain = p;
    chain.layers.push_back({MatrixXd::Identity(3, 3), VectorXd()});
    CHECK_THROWS_AS(chain.validate(), ShapeError);
  }

  TEST_CASE("initialization bounds") {
    Rng rng(9);
    MlpSpec spec;
    spec.hidden = {40};
    spec.output_dim = 6;
    spec.bias = true;
    const MlpParams p = make_mlp(spec, 25, rng);
    CHECK(p.layers[0].weight.cwiseAbs().maxCoeff() <= 1.0 / 5.0);
    CHECK(p.layers[1].weight.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(40.0));
    CHECK(p.layers[0].bias.size() == 40);
    CHECK(p.parameter_count() == 25 * 40 + 40 + 40 * 6 + 6);
  }
}

TEST_SUITE("ideal points") {
  TEST_CASE("model A ideal point is P w") {
    MatrixXd P(2, 2);
    P << 0, 2, 0, 0;
    CHECK(ideal_point_a(P, vec({0.25, 0.75})).isApprox(vec({1.5, 0})));
    CHECK(ideal_point_a(P, vec({0, 1})) == P.col(1));
    MatrixXd single(2, 1);
    single << 4, -1;
    CHECK(ideal_point_a(single, vec({1})) == single.col(0));
  }

  TEST_CASE("model B ideal direction mixes then normalizes") {
    MatrixXd swap(2, 2);
    swap << 0, 1, 1, 0;
    const std::vector<MlpParams> g = {linear_mlp(MatrixXd::Identity(2, 2)), linear_mlp(swap)};
    const VectorXd z = ideal_point_b(g, vec({0.75, 0.25}), vec({1, 0}), Mode::kEval);
    CHECK((z - vec({3, 1}) / std::sqrt(10.0)).norm() < 1e-15);
    const std::vector<MlpParams> one = {linear_mlp(2 * MatrixXd::Identity(2, 2))};
    CHECK((ideal_point_b(one, vec({1}), vec({3, 4}), Mode::kEval) - vec({0.6, 0.8})).norm() < 1e-15);
    const std::vector<MlpParams> same = {g[0], g[0]};
    CHECK(ideal_point_b(same, vec({0.1, 0.9}), vec({1, 2}), Mode::kEval)
              .isApprox(ideal_point_b(same, vec({0.7, 0.3}), vec({1, 2}), Mode::kEval)));
    MatrixXd neg = -MatrixXd::Identity(2, 2);
    const std::vector<MlpParams> cancel = {g[0], linear_mlp(neg)};
    CHECK_THROWS_AS(ideal_point_b(cancel, vec({0.5, 0.5}), vec({1, 2}), Mode::kEval), NumericError);
  }

  TEST_CASE("simplex combinations stay in the prototype hull") {
    Rng rng(17);
    const MatrixXd P = MatrixXd::Random(5, 3);
    for (int t = 0; t < 50; ++t) {
      const auto wv = rng.dirichlet_uniform(3);
      const VectorXd w = Eigen::Map<const VectorXd>(wv.data(), 3);
      const VectorXd a = ideal_point_a(P, w);
      // Least squares on the affine-constrained system recovers feasible weights.
      MatrixXd A(6, 3);
      A << P, Eigen::RowVectorXd::Ones(3);
      VectorXd b(6);
      b << a, 1.0;
      const VectorXd u = A.colPivHouseholderQr().solve(b);
      CHECK((A * u - b).norm() < 1e-8);
      CHECK(u.minCoeff() > -1e-8);
    }
  }
}

TEST_SUITE("margin") {
  TEST_CASE("model A squared-distance example") {
    const PalModel m = identity_model_a(MatrixXd::Zero(2, 1));
    const double v = margin_for_weights(m, vec({1}), inputs(vec({1, 0}), vec({2, 0})), Mode::kEval);
    CHECK(v == 3.0);
    CHECK(preference_probability(v) > 0.5);
  }

  TEST_CASE("equal items give margin 0 and probability one half") {
    const PalModel m = identity_model_a(MatrixXd::Random(3, 2));
    const VectorXd x = vec({0.2, 0.4, -1});
    CHECK(margin_for_weights(m, vec({0.3, 0.7}), inputs(x, x), Mode::kEval) == 0.0);
    CHECK(preference_probability(0.0) == 0.5);
  }

  TEST_CASE("model B parallel versus orthogonal gives margin 1") {
    PalModel m;
    m.variant = Variant::kB;
    m.item_dim = 2;
    m.context_dim = 2;
    m.f = linear_mlp(MatrixXd::Identity(2, 2));
    m.g = {linear_mlp(MatrixXd::Identity(2, 2))};
    m.weights = UserWeightTable(MatrixXd::Ones(1, 1), {"u"});
    const VectorXd ctx = vec({3, 1}), xl = vec({6, 2}), xr = vec({-1, 3});
    const RecordInputs in{xl, xr, ctx};
    CHECK(std::abs(margin_for_weights(m, vec({1}), in, Mode::kEval) - 1.0) < 1e-15);
    m.flip_b_order = true;
    CHECK(std::abs(margin_for_weights(m, vec({1}), in, Mode::kEval) + 1.0) < 1e-15);
    const RecordInputs missing{xl, xr, std::nullopt};
    CHECK_THROWS_AS(margin_for_weights(m, vec({1}), missing, Mode::kEval), ValidationError);
  }

  TEST_CASE("model A concatenates the context and zero-pads when absent") {
    PalModel m;
    m.variant = Variant::kA;
    m.item_dim = 1;
    m.context_dim = 1;
    m.f = linear_mlp(MatrixXd::Identity(2, 2));
    m.prototypes = MatrixXd::Zero(2, 1);
    m.weights = UserWeightTable(MatrixXd::Ones(1, 1), {"u"});
    const VectorXd c = vec({5});
    // |(2,5)|^2 - |(1,5)|^2 = 29 - 26
    CHECK(margin_for_weights(m, vec({1}), {vec({1}), vec({2}), c}, Mode::kEval) == 3.0);
    CHECK(margin_for_weights(m, vec({1}), {vec({1}), vec({2}), std::nullopt}, Mode::kEval) == 3.0);
    CHECK_THROWS_AS(margin_for_weights(m, vec({1}), {vec({1}), vec({2}), vec({1, 2})}, Mode::kEval),
                    ShapeError);
  }

  TEST_CASE("unregistered user is rejected") {
    Rng rng(2);
    PreferenceDataset ds = pal::testing::random_dataset(3, 0, 2, 4, rng);
    PalModel m = make_model(pal::testing::mlp_model_spec(Variant::kA, 2), 3, 0, {"r0"}, rng);
    CHECK_NOTHROW(margin(m, ds, ds.comparisons[0]));
    CHECK_THROWS_AS(margin(m, ds, ds.comparisons[1]), ValidationError);
  }

  TEST_CASE("properties over random models") {
    for (Variant v : {Variant::kA, Variant::kB}) {
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(seed);
        const int ctx = v == Variant::kB ? 3 : 2;
        const PreferenceDataset ds = pal::testing::random_dataset(4, ctx, 3, 40, rng);
        const PalModel m = make_model(pal::testing::mlp_model_spec(v, 3, true), 4, ctx,
                                      ds.users.ids(), rng);
        CHECK_NOTHROW(m.validate());
        m.weights.validate();
        const EmbeddingCache cache(ds);
        for (const auto& rec : ds.comparisons) {
          const double a = margin(m, ds, rec);
          CHECK(margin(m, ds, rec) == a);  // bit-identical replay
          CHECK(margin(m, ds, rec.swapped()) == -a);
          CHECK(preference_probability(a) + preference_probability(-a) == doctest::Approx(1.0));
          if (v == Variant::kB) {
            MarginPass pass;
            const VectorXd w = m.weights.matrix().col(0);
            margin_for_weights(m, w, cache.inputs(rec), Mode::kEval, nullptr, &pass);
            CHECK(std::abs(pass.unit_left.norm() - 1.0) < 1e-9);
            CHECK(std::abs(pass.unit_right.norm() - 1.0) < 1e-9);
            CHECK(std::abs(pass.unit_direction.norm() - 1.0) < 1e-9);
          }
        }
      }
    }
  }

  TEST_CASE("with one prototype every user scores alike") {
    for (Variant v : {Variant::kA, Variant::kB}) {
      Rng rng(8);
      const PreferenceDataset ds = pal::testing::random_dataset(3, 3, 4, 20, rng);
      PalModel m = make_model(pal::testing::mlp_model_spec(v, 1), 3, 3, ds.users.ids(), rng);
      const EmbeddingCache cache(ds);
      for (const auto& rec : ds.comparisons) {
        const double ref = margin_for_weights(m, vec({1}), cache.inputs(rec), Mode::kEval);
        for (const auto& u : ds.users.ids()) {
          ComparisonRecord other = rec;
          other.user_id = u;
          CHECK(margin(m, ds, other) == ref);
        }
      }
    }
  }
}

TEST_SUITE("weights and checkpoints") {
  TEST_CASE("weight table validation") {
    MatrixXd w(2, 2);
    w << 0.5, 1.2, 0.5, -0.2;
    const UserWeightTable t(w, {"a", "b"});
    CHECK(t.column_of("b") == 1);
    CHECK_FALSE(t.column_of("c").has_value());
    CHECK_THROWS_AS(t.validate(), ValidationError);
    CHECK_THROWS_AS(UserWeightTable(w, {"a", "a"}), ValidationError);
    CHECK_THROWS_AS(UserWeightTable(w, {"a"}), ShapeError);
  }

  TEST_CASE("fresh models start on the simplex") {
    Rng rng(3);
    std::vector<std::string> users;
    for (int i = 0; i < 30; ++i) users.push_back("x" + std::to_string(i));
    const PalModel m = make_model(pal::testing::mlp_model_spec(Variant::kA, 4), 6, 0, users, rng);
    CHECK_NOTHROW(m.weights.validate());
    CHECK(m.weights.matrix().minCoeff() >= 0.0);
    CHECK(m.prototypes.rows() == 6);
    CHECK(m.prototypes.cols() == 4);
    ModelSpec bad = pal::testing::mlp_model_spec(Variant::kB, 2);
    CHECK_THROWS_AS(make_model(bad, 6, 0, users, rng), ConfigError);
  }

  TEST_CASE("checkpoint reload is bit-exact") {
    for (Variant v : {Variant::kA, Variant::kB}) {
      Rng rng(21);
      const PreferenceDataset ds = pal::testing::random_dataset(4, 3, 3, 30, rng);
      ModelSpec spec = pal::testing::mlp_model_spec(v, 2, true);
      spec.f.residual = false;
      spec.flip_b_order = v == Variant::kB;
      const PalModel m = make_model(spec, 4, 3, ds.users.ids(), rng);
      pal::testing::TempDir dir;
      save_model(m, dir / "model.json");
      const PalModel back = load_model(dir / "model.json");
      CHECK(back.variant == m.variant);
      CHECK(back.flip_b_order == m.flip_b_order);
      CHECK(back.weights.users() == m.weights.users());
      CHECK(std::memcmp(back.weights.matrix().data(), m.weights.matrix().data(),
                        sizeof(double) * m.weights.matrix().size()) == 0);
      CHECK(back.f.dropout_rate == m.f.dropout_rate);
      CHECK(back.f.activation == m.f.activation);
      REQUIRE(back.f.layers.size() == m.f.layers.size());
      for (std::size_t l = 0; l < m.f.layers.size(); ++l) {
        CHECK(back.f.layers[l].weight == m.f.layers[l].weight);
        CHECK(back.f.layers[l].bias == m.f.layers[l].bias);
      }
      for (const auto& rec : ds.comparisons) CHECK(margin(back, ds, rec) == margin(m, ds, rec));
    }
  }

  TEST_CASE("corrupt checkpoints are rejected") {
    Rng rng(1);
    const PalModel m = make_model(pal::testing::mlp_model_spec(Variant::kA, 2), 3, 0, {"a"}, rng);
    pal::testing::TempDir dir;
    save_model(m, dir / "model.json");
    CHECK_THROWS_AS(load_model(dir / "nothing.json"), IoError);
    std::filesystem::path tensor;
    for (const auto& e : std::filesystem::directory_iterator(dir.path()))
      if (e.path().extension() == ".pale") tensor = e.path();
    REQUIRE_FALSE(tensor.empty());
    auto bytes = pal::testing::read_bytes(tensor);
    bytes.resize(bytes.size() - 3);
    pal::testing::write_bytes(tensor, bytes);
    CHECK_THROWS_AS(load_model(dir / "model.json"), FormatError);
  }
}
