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

#include "pal/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pal/errors.hpp"
#include "pal/model.hpp"

namespace pal {

std::string_view to_string(Loss loss) {
  return loss == Loss::kHinge ? "hinge" : "logistic";
}

Loss parse_loss(std::string_view text) {
  if (text == "hinge") return Loss::kHinge;
  if (text == "logistic") return Loss::kLogistic;
  throw ConfigError("unknown loss '" + std::string(text) + "'");
}

double hinge_loss(double m) { return std::max(0.0, 1.0 - m); }

double hinge_derivative(double m) { return m < 1.0 ? -1.0 : 0.0; }

double logistic_loss(double m) {
  return std::max(-m, 0.0) + std::log1p(std::exp(-std::abs(m)));
}

double logistic_derivative(double m) { return -sigmoid(-m); }

double loss_value(Loss loss, double m) {
  return loss == Loss::kHinge ? hinge_loss(m) : logistic_loss(m);
}

double loss_derivative(Loss loss, double m) {
  return loss == Loss::kHinge ? hinge_derivative(m) : logistic_derivative(m);
}

}  // namespace pal
