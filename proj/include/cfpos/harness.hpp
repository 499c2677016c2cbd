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

#ifndef CFPOS_HARNESS_HPP
#define CFPOS_HARNESS_HPP

#include "cfpos/config.hpp"
#include "cfpos/scenario.hpp"

#include <string>
#include <vector>

namespace cfpos
{

// Euclidean distance between truth and estimate, meters.
double positioning_error(const Position2D &truth, const Position2D &estimate);

struct ErrorRecord
{
    std::size_t setup = 0;
    std::size_t test_point = 0;
    Method method = Method::hybrid_gpr;
    double error_m = 0.0;
    bool operator==(const ErrorRecord &) const = default;
};

// A method that could not be trained or evaluated on one setup; its samples for that setup are absent.
struct MethodFailure
{
    std::size_t setup = 0;
    Method method = Method::hybrid_gpr;
    std::string message;
};

struct SetupResult
{
    std::vector<ErrorRecord> errors; // test-point major, methods in configuration order
    std::vector<MethodFailure> failures;
    std::size_t low_confidence_aoa = 0; // MUSIC estimates flagged over all (TP, AP) pairs
};

// Fully determined by (cfg.seed, setup_index).
SetupResult run_setup(const ExperimentConfig &cfg, std::size_t setup_index);

struct CdfPoint
{
    double error_m;
    double cdf;
};

struct MethodSummary
{
    Method method = Method::hybrid_gpr;
    std::size_t count = 0;
    double mean_m = 0.0;
    double median_m = 0.0;
    double p90_m = 0.0;
    std::vector<CdfPoint> cdf;
};

struct ExperimentResult
{
    ExperimentConfig config;
    std::vector<ErrorRecord> errors; // sorted by setup, then as produced by run_setup
    std::vector<MethodFailure> failures;
    std::vector<MethodSummary> summaries; // methods with at least one sample, configuration order
    std::size_t low_confidence_aoa = 0;
    double wall_seconds = 0.0;
    std::size_t threads_used = 1;

    // Error samples of one method in record order.
    std::vector<double> samples(Method m) const;
    bool partial_failure() const { return !failures.empty(); }
};

// Linear-interpolation quantile of an unsorted sample, q in [0, 1].
double quantile(std::vector<double> values, double q);

// Empirical CDF on `points` equally spaced errors from 0 to the maximum sample.
std::vector<CdfPoint> empirical_cdf(const std::vector<double> &samples, std::size_t points = 200);

// Summaries are computed from the records in the order given.
ExperimentResult summarize(const ExperimentConfig &cfg, std::vector<ErrorRecord> errors,
                           std::vector<MethodFailure> failures);

// Runs all setups on cfg.threads workers (0 means hardware concurrency).
ExperimentResult run_experiment(const ExperimentConfig &cfg);

// errors.csv, summary.csv, cdf.csv, failures.csv, config.echo.json and run.json in `dir`.
void emit_outputs(const ExperimentResult &result, const std::string &dir);

// One experiment per value of `param`, each value applied with set_config_value.
std::vector<ExperimentResult> sweep(const ExperimentConfig &cfg, const std::string &param,
                                    const std::vector<std::string> &values);

} // namespace cfpos

#endif
