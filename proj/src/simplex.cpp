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

#include "pal/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "pal/errors.hpp"

namespace pal {

Eigen::VectorXd project_simplex(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const Eigen::Index n = v.size();
  if (n == 0) throw ShapeError("cannot project an empty vector onto the simplex");
  if (!v.allFinite()) throw NumericError("non-finite vector passed to simplex projection");
  std::vector<double> sorted(v.data(), v.data() + n);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  // theta = (sum of the rho largest - 1) / rho for the largest feasible rho.
  double running = 0.0;
  double theta = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    running += sorted[i];
    const double candidate = (running - 1.0) / static_cast<double>(i + 1);
    if (sorted[i] - candidate > 0.0) theta = candidate;
  }
  Eigen::VectorXd w = (v.array() - theta).cwiseMax(0.0);
  // Absorb rounding so the sum is 1 up to the last ulp.
  const double total = w.sum();
  if (total > 0.0) w /= total;
  return w;
}

void project_columns(Eigen::MatrixXd& m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) m.col(c) = project_simplex(m.col(c));
}

double max_simplex_sum_error(const Eigen::MatrixXd& m) {
  double worst = 0.0;
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    worst = std::max(worst, std::abs(m.col(c).sum() - 1.0));
  return worst;
}

}  // namespace pal
