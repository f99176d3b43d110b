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

// Euclidean projection onto the probability simplex.

#ifndef PAL_SIMPLEX_HPP_
#define PAL_SIMPLEX_HPP_

#include <Eigen/Dense>

namespace pal {

/// argmin_{u in simplex} |u - v|_2 by the sort-and-threshold method.
Eigen::VectorXd project_simplex(const Eigen::Ref<const Eigen::VectorXd>& v);

/// Projects every column in place.
void project_columns(Eigen::MatrixXd& m);

/// Largest |sum - 1| over columns.
double max_simplex_sum_error(const Eigen::MatrixXd& m);

}  // namespace pal

#endif  // PAL_SIMPLEX_HPP_
