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

#ifndef CFPOS_GPR_HPP
#define CFPOS_GPR_HPP

#include "cfpos/numerics.hpp"
#include "cfpos/scenario.hpp"

#include <json.hpp>

#include <array>
#include <span>
#include <vector>

namespace cfpos
{

enum class ColumnKind
{
    rss_db,
    aoa_deg,
    other
};

// K x D feature rows with a kind tag per column.
struct FeatureMatrix
{
    RealMatrix values;
    std::vector<ColumnKind> column_kinds;

    std::size_t rows() const noexcept { return values.rows(); }
    std::size_t cols() const noexcept { return values.cols(); }
};

// Throws ConfigError on non-finite entries or a tag count that differs from the column count.
void validate(const FeatureMatrix &x);

// Per-column z-score from training rows. With standardization off the transform is the identity.
struct FeatureScaler
{
    std::vector<double> mean;
    std::vector<double> stddev;

    // Population statistics; throws ConfigError on a constant column.
    static FeatureScaler fit(const RealMatrix &x, bool standardize);

    std::vector<double> apply(std::span<const double> row) const;
    RealMatrix apply(const RealMatrix &x) const;
};

struct GprHyper
{
    double signal_var = 1.0;   // b^2
    double length_scale = 1.0; // rho, in squared feature units
    double noise_var = 0.1;    // sigma_eps^2

    std::array<double, 3> to_log() const;
    static GprHyper from_log(const std::array<double, 3> &p);
};

// b^2 exp(-||r - r2||^2 / (2 rho)). Throws DomainError on a dimension mismatch.
double se_kernel(std::span<const double> r, std::span<const double> r2, const GprHyper &hyper);

RealMatrix gram(const RealMatrix &x, const GprHyper &hyper);

// Pairwise squared Euclidean distances between the rows of x.
RealMatrix squared_distances(const RealMatrix &x);

struct LmlResult
{
    double value = 0.0;
    std::array<double, 3> gradient{}; // d/d(log b^2), d/d(log rho), d/d(log sigma^2)
};

// Log marginal likelihood of centered labels y. Throws NotPsdError (with the hyperparameters in
// the message) when A = K + sigma^2 I cannot be factorized.
LmlResult log_marginal_likelihood(const RealMatrix &x, std::span<const double> y, const GprHyper &hyper);
LmlResult log_marginal_likelihood_from_distances(const RealMatrix &sq_dist, std::span<const double> y,
                                                 const GprHyper &hyper, bool with_gradient = true);

struct GprTrainConfig
{
    bool standardize_features = true;
    std::size_t restarts = 5;
    std::size_t max_iterations = 200;
    double relative_tolerance = 1e-8;
    double log_box = 15.0; // log hyperparameters stay within init +- log_box
};

struct CoordinateModel
{
    GprHyper hyper;
    double label_offset = 0.0;
    RealMatrix chol;           // lower factor of K + sigma^2 I
    std::vector<double> alpha; // (K + sigma^2 I)^{-1} (y - offset)
    double log_likelihood = 0.0;
    double jitter = 0.0;
};

struct GprModel
{
    FeatureScaler scaler;
    RealMatrix train_features; // scaled
    std::array<CoordinateModel, 2> coords;

    std::size_t dim() const noexcept { return train_features.cols(); }
};

struct Prediction
{
    Position2D mean;
    double variance_x = 0.0;
    double variance_y = 0.0;
};

// Learns hyperparameters per coordinate by multi-start ascent of the log marginal likelihood.
GprModel train(const FeatureMatrix &x_raw, std::span<const Position2D> labels, const GprTrainConfig &cfg,
               RngStream &rng);

// Builds the posterior for fixed hyperparameters (one per coordinate), without optimization.
GprModel fit_with_hyper(const FeatureMatrix &x_raw, std::span<const Position2D> labels,
                        const std::array<GprHyper, 2> &hyper, bool standardize_features);

Prediction predict(const GprModel &model, std::span<const double> x_raw);

nlohmann::json model_to_json(const GprModel &model);
GprModel model_from_json(const nlohmann::json &j);

} // namespace cfpos

#endif
