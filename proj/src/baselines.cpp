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

#include "cfpos/baselines.hpp"
#include "cfpos/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cfpos
{

Position2D wknn_predict(const RealMatrix &db_features, std::span<const Position2D> db_positions,
                        std::span<const double> x, const WknnConfig &cfg)
{
    const std::size_t rows = db_features.rows();
    if (db_positions.size() != rows)
        throw ConfigError("WKNN: position count differs from database rows");
    if (cfg.k == 0 || cfg.k > rows)
        throw ConfigError("WKNN: k must lie in [1, K]");
    if (!(cfg.epsilon > 0.0))
        throw ConfigError("WKNN: epsilon must be positive");
    if (x.size() != db_features.cols())
        throw DomainError("WKNN: feature dimension mismatch");

    std::vector<double> dist(rows);
    for (std::size_t r = 0; r < rows; ++r)
    {
        auto row = db_features.row(r);
        double s = 0.0;
        for (std::size_t c = 0; c < x.size(); ++c)
            s += (row[c] - x[c]) * (row[c] - x[c]);
        dist[r] = std::sqrt(s);
    }
    std::vector<std::size_t> order(rows);
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cfg.k), order.end(),
                      [&](std::size_t a, std::size_t b) { return dist[a] < dist[b] || (dist[a] == dist[b] && a < b); });

    double wsum = 0.0, px = 0.0, py = 0.0;
    for (std::size_t i = 0; i < cfg.k; ++i)
    {
        const std::size_t r = order[i];
        const double w = 1.0 / (dist[r] + cfg.epsilon);
        wsum += w;
        px += w * db_positions[r].x;
        py += w * db_positions[r].y;
    }
    return {px / wsum, py / wsum};
}

LinearModel lr_fit(const RealMatrix &db_features, std::span<const Position2D> db_positions, const LrConfig &cfg)
{
    const std::size_t k = db_features.rows(), d = db_features.cols();
    if (db_positions.size() != k || k == 0)
        throw ConfigError("LR: position count differs from database rows");
    if (!(cfg.ridge_scale >= 0.0))
        throw ConfigError("LR: ridge scale must be non-negative");

    // Normal equations on the augmented design [1, X].
    const std::size_t p = d + 1;
    RealMatrix gram(p, p);
    RealMatrix rhs(p, 2);
    std::vector<double> aug(p);
    for (std::size_t r = 0; r < k; ++r)
    {
        aug[0] = 1.0;
        std::copy(db_features.row(r).begin(), db_features.row(r).end(), aug.begin() + 1);
        for (std::size_t i = 0; i < p; ++i)
        {
            for (std::size_t j = 0; j <= i; ++j)
                gram(i, j) += aug[i] * aug[j];
            rhs(i, 0) += aug[i] * db_positions[r].x;
            rhs(i, 1) += aug[i] * db_positions[r].y;
        }
    }
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < i; ++j)
            gram(j, i) = gram(i, j);

    double trace = 0.0;
    for (std::size_t i = 1; i < p; ++i)
        trace += gram(i, i);
    LinearModel model;
    model.ridge = d ? cfg.ridge_scale * trace / static_cast<double>(d) : 0.0;
    for (std::size_t i = 1; i < p; ++i)
        gram(i, i) += model.ridge;

    const auto f = cholesky_psd(gram);
    model.weights = RealMatrix(p, 2);
    for (std::size_t c = 0; c < 2; ++c)
    {
        std::vector<double> b = rhs.column(c);
        solve_lower(f.lower, std::span<double>(b));
        solve_lower_adjoint(f.lower, std::span<double>(b));
        for (std::size_t i = 0; i < p; ++i)
            model.weights(i, c) = b[i];
    }
    return model;
}

Position2D lr_predict(const LinearModel &model, std::span<const double> x)
{
    if (x.size() != model.dim())
        throw DomainError("LR: feature dimension mismatch");
    double px = model.weights(0, 0), py = model.weights(0, 1);
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        px += model.weights(i + 1, 0) * x[i];
        py += model.weights(i + 1, 1) * x[i];
    }
    return {px, py};
}

} // namespace cfpos
