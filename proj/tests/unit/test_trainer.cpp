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
#include <numeric>

#include "doctest.h"
#include "../support/random_world.hpp"
#include "pal/adam.hpp"
#include "pal/errors.hpp"
#include "pal/losses.hpp"
#include "pal/simplex.hpp"
#include "pal/synthetic.hpp"
#include "pal/trainer.hpp"

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

// 1-D items at +-1, +-2, +-3 judged by an ideal point at 0; every ordered
// pair with unequal distance, one user.
PreferenceDataset toy_line_world() {
  const std::vector<float> xs = {-3, -2, -1, 1, 2, 3};
  PreferenceDataset ds{EmbeddingMatrix(6, 1, xs), std::nullopt, {}, {}, Split::kTrain};
  ds.users.add({"toy", UserStatus::kSeen, ""});
  for (std::uint32_t l = 0; l < 6; ++l)
    for (std::uint32_t r = 0; r < 6; ++r) {
      if (std::abs(xs[l]) == std::abs(xs[r])) continue;
      ComparisonRecord rec;
      rec.id = ds.comparisons.size();
      rec.user_id = "toy";
      rec.left = l;
      rec.right = r;
      rec.label = std::abs(xs[l]) < std::abs(xs[r]) ? 1 : -1;
      ds.comparisons.push_back(rec);
    }
  return ds;
}

PalModel true_model(const GroundTruth& truth, const std::vector<std::string>& users) {
  PalModel m;
  m.variant = Variant::kA;
  m.item_dim = truth.dim();
  m.f = linear_mlp(truth.true_map);
  m.prototypes = truth.prototypes;
  const auto k = truth.prototypes.cols();
  m.weights = UserWeightTable(MatrixXd::Constant(k, static_cast<Eigen::Index>(users.size()), 1.0 / k), users);
  return m;
}

}  // namespace

TEST_SUITE("losses") {
  TEST_CASE("hinge") {
    CHECK(hinge_loss(0.0) == 1.0);
    CHECK(hinge_loss(2.0) == 0.0);
    CHECK(hinge_loss(-1.5) == 2.5);
    CHECK(hinge_derivative(0.3) == -1.0);
    CHECK(hinge_derivative(1.0) == 0.0);
    CHECK(hinge_derivative(4.0) == 0.0);
  }

  TEST_CASE("logistic is stable at both extremes") {
    CHECK(logistic_loss(0.0) == doctest::Approx(0.6931471805599453).epsilon(1e-15));
    // log(1 + e^50) = 50 + log1p(e^-50)
    CHECK(std::abs(logistic_loss(-50.0) - 50.0) < 1e-14);
    CHECK(logistic_loss(50.0) == doctest::Approx(1.9287498479639178e-22).epsilon(1e-12));
    CHECK(std::isfinite(logistic_loss(-1e6)));
    CHECK(logistic_loss(1e6) == 0.0);
    CHECK(logistic_derivative(0.0) == -0.5);
    CHECK(logistic_derivative(-800.0) == -1.0);
    for (double m : {-3.0, -0.2, 0.7, 5.0}) {
      const double h = 1e-6;
      const double fd = (logistic_loss(m + h) - logistic_loss(m - h)) / (2 * h);
      CHECK(logistic_derivative(m) == doctest::Approx(fd).epsilon(1e-8));
    }
  }

  TEST_CASE("loss names") {
    CHECK(parse_loss("hinge") == Loss::kHinge);
    CHECK(parse_loss("logistic") == Loss::kLogistic);
    CHECK_THROWS_AS(parse_loss("mse"), ConfigError);
    CHECK(loss_value(Loss::kLogistic, 1.0) == logistic_loss(1.0));
  }
}

TEST_SUITE("adam") {
  TEST_CASE("zero gradient leaves parameters unchanged") {
    VectorXd theta = vec({1, -2, 3});
    const VectorXd before = theta;
    const VectorXd g = VectorXd::Zero(3);
    AdamState st;
    const ParamSlot s{"t", {theta.data(), 3}, {g.data(), 3}, false};
    for (int i = 0; i < 5; ++i) adam_step(st, std::span<const ParamSlot>(&s, 1), 0.1, 0.0);
    CHECK(theta == before);
    CHECK(st.step == 5);
  }

  TEST_CASE("first step moves each coordinate by about lr") {
    VectorXd theta = vec({0, 0, 0});
    const VectorXd g = vec({3, -0.01, 1e3});
    AdamState st;
    const ParamSlot s{"t", {theta.data(), 3}, {g.data(), 3}, false};
    adam_step(st, std::span<const ParamSlot>(&s, 1), 0.01, 0.0);
    CHECK(theta[0] == doctest::Approx(-0.01).epsilon(1e-6));
    CHECK(theta[1] == doctest::Approx(0.01).epsilon(1e-5));
    CHECK(theta[2] == doctest::Approx(-0.01).epsilon(1e-6));
  }

  TEST_CASE("two steps match the unrolled recurrence") {
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8, lr = 0.05, wd = 0.1;
    VectorXd theta = vec({0.5, -1.5});
    VectorXd g = vec({0.2, 0.7});
    AdamState st;
    const ParamSlot s{"t", {theta.data(), 2}, {g.data(), 2}, true};
    double ref[2] = {0.5, -1.5}, m[2] = {0, 0}, v[2] = {0, 0};
    const double grads[2][2] = {{0.2, 0.7}, {-0.4, 0.1}};
    for (int t = 1; t <= 2; ++t) {
      g << grads[t - 1][0], grads[t - 1][1];
      adam_step(st, std::span<const ParamSlot>(&s, 1), lr, wd);
      for (int i = 0; i < 2; ++i) {
        const double gi = grads[t - 1][i] + wd * ref[i];
        m[i] = b1 * m[i] + (1 - b1) * gi;
        v[i] = b2 * v[i] + (1 - b2) * gi * gi;
        const double mh = m[i] / (1 - std::pow(b1, t));
        const double vh = v[i] / (1 - std::pow(b2, t));
        ref[i] -= lr * mh / (std::sqrt(vh) + eps);
      }
    }
    CHECK(std::abs(theta[0] - ref[0]) < 1e-12);
    CHECK(std::abs(theta[1] - ref[1]) < 1e-12);
  }

  TEST_CASE("weight decay only touches opted-in slots") {
    VectorXd a = vec({2}), b = vec({2});
    const VectorXd g = vec({0});
    AdamState st;
    const ParamSlot slots[2] = {{"a", {a.data(), 1}, {g.data(), 1}, true},
                                {"b", {b.data(), 1}, {g.data(), 1}, false}};
    adam_step(st, slots, 0.1, 0.5);
    CHECK(a[0] < 2.0);
    CHECK(b[0] == 2.0);
  }
}

TEST_SUITE("simplex") {
  TEST_CASE("projection examples") {
    CHECK(project_simplex(vec({0.2, 0.3, 0.5})).isApprox(vec({0.2, 0.3, 0.5})));
    CHECK((project_simplex(vec({0.8, 0.4})) - vec({0.7, 0.3})).norm() < 1e-15);
    CHECK(project_simplex(vec({-5, -5})) == vec({0.5, 0.5}));
    CHECK(project_simplex(vec({10, 0, -3})) == vec({1, 0, 0}));
    CHECK(project_simplex(vec({7})) == vec({1}));
  }

  TEST_CASE("projection satisfies the variational inequality") {
    Rng rng(12);
    for (int t = 0; t < 200; ++t) {
      const int k = 1 + static_cast<int>(rng.below(6));
      VectorXd v(k);
      for (int i = 0; i < k; ++i) v[i] = rng.normal(0, 2);
      const VectorXd w = project_simplex(v);
      CHECK(std::abs(w.sum() - 1.0) < 1e-12);
      CHECK(w.minCoeff() >= 0.0);
      CHECK((project_simplex(w) - w).norm() < 1e-12);
      for (int j = 0; j < 20; ++j) {
        const auto uv = rng.dirichlet_uniform(static_cast<std::size_t>(k));
        const VectorXd u = Eigen::Map<const VectorXd>(uv.data(), k);
        CHECK((v - w).dot(u - w) <= 1e-12);
      }
    }
  }

  TEST_CASE("column helpers") {
    MatrixXd m(2, 2);
    m << 3, 0.5, 1, 0.5;
    CHECK(max_simplex_sum_error(m) == 3.0);
    project_columns(m);
    CHECK(max_simplex_sum_error(m) < 1e-15);
    CHECK(m.col(0) == vec({1, 0}));
  }
}

TEST_SUITE("gradients") {
  TEST_CASE("hand-derived gradient for a one-prototype linear model A") {
    MatrixXd F(2, 2);
    F << 0.7, -0.2, 0.4, 1.1;
    PalModel m;
    m.variant = Variant::kA;
    m.item_dim = 2;
    m.f = linear_mlp(F);
    m.prototypes = MatrixXd(2, 1);
    m.prototypes << 0.3, -0.5;
    m.weights = UserWeightTable(MatrixXd::Ones(1, 1), {"u"});
    const VectorXd xl = vec({1.0, 0.2}), xr = vec({-0.4, 0.9}), w = vec({1});
    MarginPass pass;
    margin_for_weights(m, w, {xl, xr, std::nullopt}, Mode::kEval, nullptr, &pass);
    ModelGrads g = ModelGrads::zeros_like(m);
    VectorXd gw = VectorXd::Zero(1);
    backward(m, pass, w, 1.0, &g, gw);
    const VectorXd p = m.prototypes.col(0);
    const VectorXd dr = xr - p, dl = xl - p;
    const MatrixXd dF = 2 * F * dr * dr.transpose() - 2 * F * dl * dl.transpose();
    const VectorXd dp = -2 * F.transpose() * F * dr + 2 * F.transpose() * F * dl;
    CHECK((g.f.weight[0] - dF).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((g.prototypes.col(0) - dp).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(std::abs(gw[0] - dp.dot(p)) < 1e-10);
  }

  TEST_CASE("zero f gives zero weight gradient") {
    PalModel m;
    m.variant = Variant::kA;
    m.item_dim = 2;
    m.f = linear_mlp(MatrixXd::Zero(3, 2));
    m.prototypes = MatrixXd::Random(2, 3);
    m.weights = UserWeightTable(MatrixXd::Constant(3, 1, 1.0 / 3), {"u"});
    const VectorXd w = m.weights.matrix().col(0);
    MarginPass pass;
    const double v = margin_for_weights(m, w, {vec({1, 2}), vec({-1, -2}), std::nullopt},
                                        Mode::kEval, nullptr, &pass);
    CHECK(v == 0.0);
    VectorXd gw = VectorXd::Zero(3);
    backward(m, pass, w, -1.0, nullptr, gw);
    CHECK(gw.isZero(0.0));
  }

  TEST_CASE("finite differences on random instances") {
    int checked = 0;
    for (Variant v : {Variant::kA, Variant::kB}) {
      for (Loss loss : {Loss::kHinge, Loss::kLogistic}) {
        for (std::uint64_t seed = 0; seed < 4; ++seed) {
          Rng rng(100 + seed);
          const PreferenceDataset ds = pal::testing::random_dataset(3, 2, 2, 6, rng);
          PalModel m = make_model(pal::testing::mlp_model_spec(v, 2), 3, 2, ds.users.ids(), rng);
          const EmbeddingCache cache(ds);
          ModelGrads g = ModelGrads::zeros_like(m);
          const std::span<const ComparisonRecord> recs(ds.comparisons);
          const auto near_kink = [&] {
            for (const auto& r : recs)
              if (std::abs(r.label * margin(m, ds, r) - 1.0) < 1e-3) return true;
            return false;
          };
          if (loss == Loss::kHinge && near_kink()) continue;
          batch_loss_and_gradient(m, cache, recs, loss, Mode::kEval, nullptr, &g);
          std::vector<ParamSlot> slots = parameter_slots(m, g);
          for (auto& s : slots) {
            for (std::size_t i = 0; i < s.value.size(); ++i) {
              const double orig = s.value[i];
              const double h = 1e-6 * std::max(1.0, std::abs(orig));
              s.value[i] = orig + h;
              const double up = batch_loss_and_gradient(m, cache, recs, loss, Mode::kEval, nullptr, nullptr);
              s.value[i] = orig - h;
              const double dn = batch_loss_and_gradient(m, cache, recs, loss, Mode::kEval, nullptr, nullptr);
              s.value[i] = orig;
              const double fd = (up - dn) / (2 * h);
              const double an = s.grad[i];
              CHECK_MESSAGE(std::abs(fd - an) <= 1e-4 * std::max(std::abs(fd), std::abs(an)) + 1e-8,
                            s.name << "[" << i << "] fd=" << fd << " analytic=" << an);
              ++checked;
            }
          }
        }
      }
    }
    CHECK(checked > 500);
  }

  TEST_CASE("flipped data leaves loss and gradient unchanged") {
    Rng rng(5);
    const PreferenceDataset ds = pal::testing::random_dataset(3, 2, 3, 30, rng);
    const PreferenceDataset fl = ds.flipped();
    for (Variant v : {Variant::kA, Variant::kB}) {
      const PalModel m = make_model(pal::testing::mlp_model_spec(v, 3), 3, 2, ds.users.ids(), rng);
      for (Loss loss : {Loss::kHinge, Loss::kLogistic}) {
        ModelGrads g1 = ModelGrads::zeros_like(m), g2 = ModelGrads::zeros_like(m);
        const double a = batch_loss_and_gradient(m, EmbeddingCache(ds), ds.comparisons, loss,
                                                 Mode::kEval, nullptr, &g1);
        const double b = batch_loss_and_gradient(m, EmbeddingCache(fl), fl.comparisons, loss,
                                                 Mode::kEval, nullptr, &g2);
        CHECK(a == b);
        // Same terms summed in another order.
        CHECK(g1.weights.isApprox(g2.weights, 1e-12));
        CHECK(g1.f.weight[0].isApprox(g2.f.weight[0], 1e-12));
      }
    }
  }

  TEST_CASE("projected gradient descent on weights alone never raises the logistic loss") {
    SyntheticConfig c;
    c.d = 4;
    c.k_star = 3;
    c.n_users = 6;
    c.n_per_user = 30;
    c.seed = 2;
    const SyntheticWorld world = make_synthetic_world(c);
    Rng rng(3);
    ModelSpec spec;
    spec.num_prototypes = 3;
    PalModel m = make_model(spec, 4, 0, world.train.users.ids(), rng);
    const EmbeddingCache cache(world.train);
    double prev = std::numeric_limits<double>::infinity();
    for (int step = 0; step < 100; ++step) {
      ModelGrads g = ModelGrads::zeros_like(m);
      const double loss = batch_loss_and_gradient(m, cache, world.train.comparisons, Loss::kLogistic,
                                                  Mode::kEval, nullptr, &g);
      CHECK(loss <= prev + 1e-12);
      prev = loss;
      m.weights.matrix() -= 0.5 * g.weights;
      project_columns(m.weights.matrix());
    }
  }
}

TEST_SUITE("training") {
  TEST_CASE("separable line world reaches full train accuracy") {
    const PreferenceDataset ds = toy_line_world();
    Rng rng(0);
    ModelSpec spec;
    spec.num_prototypes = 1;
    PalModel m = make_model(spec, 1, 0, ds.users.ids(), rng);
    TrainConfig tc;
    tc.epochs = 200;
    tc.lr_f = 0.05;
    tc.lr_proto_weights = 0.05;
    const TrainResult r = train(m, ds, nullptr, tc);
    CHECK(r.history.epochs.size() == 200);
    CHECK(r.history.epochs.back().train_accuracy == 1.0);
  }

  TEST_CASE("default synthetic run keeps every weight column on the simplex") {
    SyntheticConfig c;
    const SyntheticWorld world = make_synthetic_world(c);
    Rng rng(derive_seed(0, 10));
    ModelSpec spec;
    spec.num_prototypes = 3;
    const PalModel m = make_model(spec, 16, 0, world.train.users.ids(), rng);
    const TrainConfig tc;
    const TrainResult r = train(m, world.train, &world.test, tc);
    CHECK(r.history.epochs.size() == 1000);
    CHECK(r.history.steps == 1000 * 20);
    CHECK(r.history.max_weight_sum_error <= 1e-9);
    CHECK(r.history.min_weight_entry >= 0.0);
    CHECK_NOTHROW(r.model.weights.validate());
    CHECK(r.history.epochs.back().val_accuracy > 0.9);
  }

  TEST_CASE("reruns are bit-identical and the seed matters") {
    Rng data_rng(7);
    const PreferenceDataset ds = pal::testing::random_dataset(3, 2, 4, 90, data_rng);
    Rng a(1), b(1);
    const PalModel m1 = make_model(pal::testing::mlp_model_spec(Variant::kB, 2, true), 3, 2, ds.users.ids(), a);
    const PalModel m2 = make_model(pal::testing::mlp_model_spec(Variant::kB, 2, true), 3, 2, ds.users.ids(), b);
    TrainConfig tc;
    tc.epochs = 15;
    tc.batch_size = 16;
    tc.loss = Loss::kLogistic;
    const std::string h1 = train(m1, ds, &ds, tc).history.to_csv();
    CHECK(h1 == train(m2, ds, &ds, tc).history.to_csv());
    tc.seed = 1;
    CHECK(h1 != train(m2, ds, &ds, tc).history.to_csv());
    CHECK(h1.rfind("epoch,train_loss,train_acc,val_acc\n1,", 0) == 0);
  }

  TEST_CASE("keep-best returns the earliest best validation epoch") {
    const PreferenceDataset ds = toy_line_world();
    Rng rng(4);
    ModelSpec spec;
    spec.num_prototypes = 1;
    const PalModel m = make_model(spec, 1, 0, ds.users.ids(), rng);
    TrainConfig tc;
    tc.epochs = 60;
    tc.lr_f = 0.05;
    tc.lr_proto_weights = 0.05;
    tc.keep_best_on_val = true;
    const TrainResult r = train(m, ds, &ds, tc);
    double best = -1;
    int best_epoch = -1;
    for (const auto& e : r.history.epochs)
      if (e.val_accuracy > best) {
        best = e.val_accuracy;
        best_epoch = e.epoch;
      }
    CHECK(r.history.best_epoch == best_epoch);
    const TrainResult again = train(m, ds, nullptr, [&] {
      TrainConfig t = tc;
      t.epochs = best_epoch;
      t.keep_best_on_val = false;
      return t;
    }());
    CHECK(again.model.prototypes == r.model.prototypes);
  }

  TEST_CASE("training errors") {
    PreferenceDataset ds = toy_line_world();
    Rng rng(0);
    ModelSpec spec;
    PalModel m = make_model(spec, 1, 0, {"someone_else"}, rng);
    TrainConfig tc;
    tc.epochs = 1;
    CHECK_THROWS_AS(train(m, ds, nullptr, tc), ValidationError);
    m = make_model(spec, 1, 0, {"toy"}, rng);
    PreferenceDataset empty = ds;
    empty.comparisons.clear();
    CHECK_THROWS_AS(train(m, empty, nullptr, tc), ValidationError);
    tc.epochs = 0;
    CHECK_THROWS_AS(train(m, ds, nullptr, tc), ConfigError);
    tc.epochs = 1;
    tc.lr_f = 0;
    CHECK_THROWS_AS(tc.validate(), ConfigError);
  }
}

TEST_SUITE("localization") {
  TEST_CASE("one prototype needs no learning") {
    Rng rng(0);
    const PreferenceDataset ds = pal::testing::random_dataset(2, 0, 1, 5, rng);
    ModelSpec spec;
    const PalModel m = make_model(spec, 2, 0, ds.users.ids(), rng);
    const LocalizeResult r = localize_user(m, ds, ds.comparisons, TrainConfig{});
    CHECK(r.weights == vec({1}));
    CHECK(r.history.steps == 0);
    CHECK_FALSE(r.zero_shot_fallback);
  }

  TEST_CASE("no records falls back to zero-shot weights") {
    Rng rng(0);
    const PreferenceDataset ds = pal::testing::random_dataset(2, 0, 3, 5, rng);
    ModelSpec spec;
    spec.num_prototypes = 3;
    const PalModel m = make_model(spec, 2, 0, ds.users.ids(), rng);
    const LocalizeResult r = localize_user(m, ds, {}, TrainConfig{});
    CHECK(r.zero_shot_fallback);
    CHECK(r.weights.isApprox(m.weights.matrix().rowwise().mean()));
    CHECK_THROWS_AS(localize_user(m, ds, ds.comparisons, TrainConfig{}), ValidationError);
  }

  TEST_CASE("true model localizes partition users onto their prototype") {
    SyntheticConfig c;
    c.k_star = 3;
    c.n_users = 6;
    c.n_per_user = 60;
    c.setting = UserSetting::kPartition;
    c.seed = 11;
    const SyntheticWorld world = make_synthetic_world(c);
    const PalModel m = true_model(world.truth, {"anchor"});
    TrainConfig tc;
    tc.loss = Loss::kLogistic;
    tc.lr_proto_weights = 0.05;
    for (const auto& user : world.train.users.ids()) {
      std::vector<ComparisonRecord> recs;
      for (const auto& r : world.train.comparisons)
        if (r.user_id == user) recs.push_back(r);
      REQUIRE(recs.size() == 60);
      const LocalizeResult r = localize_user(m, world.train, recs, tc);
      const auto idx = *world.truth.user_index(user);
      Eigen::Index k_true, k_hat;
      world.truth.user_mixtures.col(static_cast<Eigen::Index>(idx)).maxCoeff(&k_true);
      r.weights.maxCoeff(&k_hat);
      CHECK(k_hat == k_true);
      // The finite-sample loss minimum sits near, not exactly on, the vertex.
      CHECK(r.weights[k_true] > 0.9);
      CHECK(r.history.max_weight_sum_error <= 1e-9);
      CHECK(r.history.min_weight_entry >= 0.0);
    }
  }

  TEST_CASE("zero-shot weights average the table") {
    MatrixXd w(2, 3);
    w << 1, 0, 1, 0, 1, 0;
    const UserWeightTable t(w, {"a", "b", "c"});
    CHECK(zero_shot_weights(t, {"a", "b"}) == vec({0.5, 0.5}));
    CHECK(zero_shot_weights(t, {"a", "c"}) == vec({1, 0}));
    CHECK(zero_shot_weights(t).isApprox(vec({2.0 / 3, 1.0 / 3})));
    CHECK_THROWS_AS(zero_shot_weights(t, {}), ValidationError);
    CHECK_THROWS_AS(zero_shot_weights(t, {"zz"}), ValidationError);
    CHECK_THROWS_AS(zero_shot_weights(UserWeightTable(MatrixXd(2, 0), {})), ValidationError);
  }
}
