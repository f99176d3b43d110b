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

// Adam with bias-corrected moments and L2 weight decay folded into the
// gradient (g + decay * theta) for slots that opt in.

#ifndef PAL_ADAM_HPP_
#define PAL_ADAM_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pal {

struct AdamConstants {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One parameter tensor viewed as flat storage together with its gradient.
struct ParamSlot {
  std::string name;
  std::span<double> value;
  std::span<const double> grad;
  bool decay = false;
};

struct AdamState {
  AdamConstants constants;
  std::vector<Eigen::VectorXd> first_moment;
  std::vector<Eigen::VectorXd> second_moment;
  std::int64_t step = 0;
};

/// Moments are created on first use and must keep their shapes afterwards.
void adam_step(AdamState& state, std::span<const ParamSlot> slots, double lr,
               double weight_decay);

}  // namespace pal

#endif  // PAL_ADAM_HPP_
