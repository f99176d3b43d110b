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

#include "pal/adam.hpp"

#include <cmath>

#include "pal/errors.hpp"

namespace pal {

void adam_step(AdamState& state, std::span<const ParamSlot> slots, double lr,
               double weight_decay) {
  if (state.first_moment.empty()) {
    for (const auto& s : slots) {
      state.first_moment.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.value.size())));
      state.second_moment.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.value.size())));
    }
  }
  if (state.first_moment.size() != slots.size())
    throw ShapeError("Adam state has " + std::to_string(state.first_moment.size()) +
                     " slots, step received " + std::to_string(slots.size()));
  ++state.step;
  const auto& c = state.constants;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const auto& s = slots[i];
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    if (static_cast<std::size_t>(m.size()) != s.value.size() ||
        s.grad.size() != s.value.size())
      throw ShapeError("Adam slot '" + s.name + "' changed shape");
    const double decay = s.decay ? weight_decay : 0.0;
    for (std::size_t j = 0; j < s.value.size(); ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      const double g = s.grad[j] + decay * s.value[j];
      m[jj] = c.beta1 * m[jj] + (1.0 - c.beta1) * g;
      v[jj] = c.beta2 * v[jj] + (1.0 - c.beta2) * g * g;
      const double m_hat = m[jj] / correction1;
      const double v_hat = v[jj] / correction2;
      s.value[j] -= lr * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

}  // namespace pal
