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

#include "doctest.h"
#include "pal/errors.hpp"
#include "pal/rng.hpp"
#include "pal/synthetic.hpp"

using namespace pal;

namespace {

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

Eigen::VectorXd item(const PreferenceDataset& ds, std::uint32_t row) {
  const auto r = ds.items.row(row);
  Eigen::VectorXd v(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) v(i) = r[i];
  return v;
}

}  // namespace

TEST_SUITE("synthetic") {
  TEST_CASE("true map shapes and statistics") {
    Rng a(1), b(2);
    const Eigen::MatrixXd m1 = make_true_map(1, a), m2 = make_true_map(1, b);
    CHECK(m1.rows() == 1);
    CHECK(m1.cols() == 1);
    CHECK(m1(0, 0) != m2(0, 0));
    Rng c(3);
    const Eigen::MatrixXd big = make_true_map(16, c);
    CHECK(std::abs(big.mean()) < 4.0 / std::sqrt(256.0));
    Rng d(3);
    CHECK(make_true_map(16, d) == big);
  }

  TEST_CASE("prototype sampling respects the separation") {
    Rng rng(5);
    const Eigen::MatrixXd one = sample_prototypes(4, 1, 1e6, rng, 1);
    CHECK(one.cols() == 1);
    for (int seed = 0; seed < 20; ++seed) {
      Rng r(seed);
      const Eigen::MatrixXd p = sample_prototypes(16, 3, 1.0, r, 100000);
      for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) CHECK((p.col(i) - p.col(j)).norm() >= 1.0);
    }
    Rng bad(7);
    CHECK_THROWS_AS(sample_prototypes(1, 10, 100.0, bad, 1000), InfeasibleError);
  }

  TEST_CASE("partition users sit on prototypes in turn") {
    Rng rng(1);
    const Eigen::MatrixXd p = sample_prototypes(3, 2, 0.0, rng, 10);
    const SampledUsers u = sample_users(p, 4, UserSetting::kPartition, rng);
    const int expected[] = {0, 1, 0, 1};
    for (int i = 0; i < 4; ++i) {
      CHECK(u.mixtures(expected[i], i) == 1.0);
      CHECK(u.mixtures.col(i).sum() == 1.0);
      CHECK(u.points.col(i) == p.col(expected[i]));
    }
  }

  TEST_CASE("mixture users lie in the convex hull with uniform mean weights") {
    Rng rng(9);
    const Eigen::MatrixXd p = sample_prototypes(5, 3, 0.5, rng, 10000);
    const SampledUsers u = sample_users(p, 150, UserSetting::kMixture, rng);
    for (int i = 0; i < 150; ++i) {
      CHECK(u.mixtures.col(i).minCoeff() >= 0.0);
      CHECK(std::abs(u.mixtures.col(i).sum() - 1.0) < 1e-12);
      CHECK((p * u.mixtures.col(i) - u.points.col(i)).norm() < 1e-9);
    }
    const Eigen::VectorXd m = u.mixtures.rowwise().mean();
    for (int k = 0; k < 3; ++k) CHECK(std::abs(m(k) - 1.0 / 3.0) < 0.05);
  }

  TEST_CASE("true label examples") {
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(2, 2);
    CHECK(true_label(id, vec2(0, 0), vec2(1, 0), vec2(2, 0)) == 1);
    CHECK(true_label(id, vec2(0, 0), vec2(2, 0), vec2(1, 0)) == -1);
    CHECK(true_label(id, vec2(0, 0), vec2(1, 0), vec2(0, 1)) == 0);
  }

  TEST_CASE("a zero map exhausts the redraw budget") {
    GroundTruth truth;
    truth.true_map = Eigen::MatrixXd::Zero(2, 2);
    truth.prototypes = Eigen::MatrixXd::Zero(2, 1);
    truth.user_points = Eigen::MatrixXd::Zero(2, 1);
    truth.user_mixtures = Eigen::MatrixXd::Ones(1, 1);
    truth.user_ids = {"u0"};
    CHECK_THROWS_AS(generate_comparisons(truth, 1, 0), InfeasibleError);
  }

  TEST_CASE("default world: N*n records, no ties, labels reproducible") {
    SyntheticConfig c;  // d=16, K*=3, N=100, n=100, delta=1
    c.seed = 4;
    const SyntheticWorld w = make_synthetic_world(c);
    CHECK(w.train.comparisons.size() == 10000);
    CHECK(w.test.comparisons.size() == 5000);
    CHECK_FALSE(w.unseen.has_value());
    CHECK(w.train.users.size() == 100);
    int mismatches = 0, ties = 0;
    const Eigen::MatrixXd scaled = 3.5 * w.truth.true_map;
    int scale_changes = 0;
    for (const auto& rec : w.train.comparisons) {
      const auto u = *w.truth.user_index(rec.user_id);
      const Eigen::VectorXd a = w.truth.user_points.col(static_cast<Eigen::Index>(u));
      const Eigen::VectorXd l = item(w.train, rec.left), r = item(w.train, rec.right);
      const int lab = true_label(w.truth.true_map, a, l, r);
      ties += lab == 0;
      mismatches += lab != rec.label;
      scale_changes += true_label(scaled, a, l, r) != rec.label;
      CHECK(true_label(w.truth.true_map, a, r, l) == -lab);
    }
    CHECK(ties == 0);
    CHECK(mismatches == 0);
    CHECK(scale_changes == 0);
  }

  TEST_CASE("worlds are deterministic and split streams are disjoint") {
    SyntheticConfig c;
    c.d = 3;
    c.n_users = 5;
    c.n_per_user = 4;
    c.n_heldout_per_user = 2;
    c.n_unseen_users = 2;
    c.n_per_unseen_user = 3;
    c.seed = 9;
    const SyntheticWorld a = make_synthetic_world(c), b = make_synthetic_world(c);
    CHECK(a.train.items == b.train.items);
    CHECK(a.test.items == b.test.items);
    CHECK(a.truth.user_points == b.truth.user_points);
    CHECK_FALSE(a.train.items == a.test.items);
    REQUIRE(a.unseen.has_value());
    CHECK(a.unseen->comparisons.size() == 6);
    CHECK(a.unseen->split == Split::kTest);
    for (const auto& e : a.unseen->users.entries()) CHECK(e.status == UserStatus::kUnseen);
    CHECK(a.truth.user_ids.size() == 7);
    c.seed = 10;
    CHECK_FALSE(make_synthetic_world(c).train.items == a.train.items);
  }

  TEST_CASE("ground truth JSON round-trip") {
    SyntheticConfig c;
    c.d = 2;
    c.n_users = 3;
    c.n_per_user = 1;
    const SyntheticWorld w = make_synthetic_world(c);
    const GroundTruth back = ground_truth_from_json(ground_truth_to_json(w.truth));
    CHECK(back.true_map == w.truth.true_map);
    CHECK(back.prototypes == w.truth.prototypes);
    CHECK(back.user_points == w.truth.user_points);
    CHECK(back.user_mixtures == w.truth.user_mixtures);
    CHECK(back.user_ids == w.truth.user_ids);
  }

  TEST_CASE("config validation") {
    SyntheticConfig c;
    c.d = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.delta = -1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.n_per_user = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK(parse_user_setting("partition") == UserSetting::kPartition);
    CHECK_THROWS(parse_user_setting("cluster"));
  }
}
