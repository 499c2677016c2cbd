// SPDX-License-Identifier: Apache-2.0
//
// cfpos: fingerprint positioning toolkit for cell-free massive MIMO networks
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef CFPOS_BASELINES_HPP
#define CFPOS_BASELINES_HPP

#include "cfpos/numerics.hpp"
#include "cfpos/scenario.hpp"

#include <span>

namespace cfpos
{

struct WknnConfig
{
    std::size_t k = 4;
    double epsilon = 1e-9; // weight floor in feature units
};

// Inverse-distance weighted mean of the k nearest database rows (Euclidean; ties go to the lower
// row index). Features must already share one scaling.
Position2D wknn_predict(const RealMatrix &db_features, std::span<const Position2D> db_positions,
                        std::span<const double> x, const WknnConfig &cfg);

struct LrConfig
{
    double ridge_scale = 1e-6; // lambda = ridge_scale * trace(X^T X) / D
};

// Affine map [1; x] -> position stored as a (D+1) x 2 weight matrix; row 0 is the intercept.
struct LinearModel
{
    RealMatrix weights;
    double ridge = 0.0;

    std::size_t dim() const noexcept { return weights.rows() ? weights.rows() - 1 : 0; }
};

// Ridge-stabilized affine least squares; the intercept is not penalized.
LinearModel lr_fit(const RealMatrix &db_features, std::span<const Position2D> db_positions,
                   const LrConfig &cfg = {});
Position2D lr_predict(const LinearModel &model, std::span<const double> x);

} // namespace cfpos

#endif
