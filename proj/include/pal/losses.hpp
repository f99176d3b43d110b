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

// Margin losses. Both take the margin of the truly preferred side.

#ifndef PAL_LOSSES_HPP_
#define PAL_LOSSES_HPP_

#include <string_view>

namespace pal {

enum class Loss { kHinge, kLogistic };

std::string_view to_string(Loss loss);
Loss parse_loss(std::string_view text);

/// max(0, 1 - m)
double hinge_loss(double m);
/// -1 for m < 1, else 0 (the kink gets 0).
double hinge_derivative(double m);

/// softplus(-m) = log(1 + exp(-m)), evaluated without overflow.
double logistic_loss(double m);
/// -sigmoid(-m)
double logistic_derivative(double m);

double loss_value(Loss loss, double m);
double loss_derivative(Loss loss, double m);

}  // namespace pal

#endif  // PAL_LOSSES_HPP_
