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

#ifndef CFPOS_CHANNEL_HPP
#define CFPOS_CHANNEL_HPP

#include "cfpos/numerics.hpp"
#include "cfpos/scenario.hpp"

#include <json.hpp>

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace cfpos
{

inline constexpr double kSpeedOfLight = 299792458.0; // m/s

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

// Log-distance path loss with log-normal shadowing. Defaults: urban micro street canyon NLOS.
struct PathLossParams
{
    double p0_db = -28.8;     // gain at the reference distance
    double d0 = 1.0;          // reference distance, meters
    double gamma = 3.53;      // path-loss exponent
    double sigma_sf_db = 8.0; // shadowing standard deviation
    double d_corr = 13.0;     // shadowing decorrelation distance, meters
};

// Link-level radio parameters. Powers are linear milliwatts.
struct RadioParams
{
    double tx_power_mw = 100.0;                  // rho
    double noise_power_mw = 2.5118864315095822e-10; // sigma_n^2 = -96 dBm
    std::size_t pilot_len = 1;                   // z
    std::size_t n_samples = 200;                 // S
    double angular_spread_deg = 10.0;            // single-side spread Delta of the disk scattering model
};

void validate(const PathLossParams &p);
void validate(const RadioParams &r);

// Per-AP shadowing values (dB) at every location point of a setup.
struct ShadowField
{
    std::vector<Position2D> points;
    std::vector<std::vector<double>> values_db; // [ap][point]

    double at(std::size_t ap, std::size_t point) const { return values_db.at(ap).at(point); }
    std::size_t n_aps() const noexcept { return values_db.size(); }
};

// A covariance together with a soft-validity flag (spread outside the small-angle regime,
// or fewer samples than dimensions).
struct CovarianceResult
{
    HermitianCovariance cov;
    bool warning = false;
    std::string note;
};

struct LinkStats
{
    double beta_linear = 0.0;      // large-scale gain
    double nominal_aoa_deg = 0.0;  // geometric azimuth, (-180, 180]
    HermitianCovariance channel_cov; // channel term only, trace = N * beta
};

// N x S*z complex samples; column block s holds Y_s = sqrt(rho) h_s psi^H + W_s with psi = 1_z.
struct SampleBatch
{
    ComplexMatrix samples;
    std::size_t pilot_len = 1;

    std::size_t n_antennas() const noexcept { return samples.rows(); }
    std::size_t n_samples() const noexcept { return pilot_len ? samples.cols() / pilot_len : 0; }
};

// p0_db - 10 gamma log10(d / d0) + shadow_db. Throws DomainError for d <= 0.
double path_loss_beta_db(double distance, const PathLossParams &params, double shadow_db);

// Covariance sigma^2 * 2^(-distance / d_corr) between every pair of points (dB^2).
RealMatrix shadow_covariance(std::span<const Position2D> points, double sigma_sf_db, double d_corr);

// Jointly Gaussian shadowing over all points, independently per AP, with covariance
// sigma^2 * 2^(-distance / d_corr) between any two points.
ShadowField sample_shadow_field(std::span<const Position2D> points, std::size_t n_aps, double sigma_sf_db,
                                double d_corr, RngStream &rng);

// Entry n (0-based) = exp(-j 2 pi spacing n cos(theta)).
std::vector<cplx> steering_vector(double theta_deg, std::size_t n_antennas, double spacing);

// beta * G(zeta) (Hadamard) a(phi) a(phi)^H, [G]_mn = J0((m-n) zeta) + J2((m-n) zeta),
// zeta = 2 pi spacing Delta sin(phi). Spreads beyond 15 degrees are flagged as outside the model's validity.
CovarianceResult disk_scattering_cov(double beta_linear, double nominal_aoa_deg, std::size_t n_antennas,
                                     double spacing, double delta_deg);

// Large-scale statistics of the link between an AP and a UE position.
LinkStats make_link_stats(const ApSite &ap, const Position2D &ue, double ue_height, const PathLossParams &pathloss,
                          const RadioParams &radio, double shadow_db);

// Draws S independent channel realizations from CN(0, channel_cov) plus white noise.
SampleBatch synthesize_samples(const LinkStats &link, const RadioParams &radio, RngStream &rng);

// Alternate generator summing n_paths plane waves whose offsets follow the disk-scattering
// angular distribution (semicircle law scaled by the spread). Used for cross-validation only.
SampleBatch synthesize_samples_path_sum(double beta_linear, double nominal_aoa_deg, std::size_t n_antennas,
                                        double spacing, const RadioParams &radio, std::size_t n_paths,
                                        RngStream &rng);

// 10 log10( (1/S) sum_s ||Y_s||_F^2 / rho ). Throws ConfigError on an all-zero batch.
double estimate_rss_db(const SampleBatch &batch, double rho);

// (1/S) sum_s Y_s Y_s^H; flagged when S < N.
CovarianceResult estimate_sample_cov(const SampleBatch &batch);

nlohmann::json link_stats_to_json(const LinkStats &link);

} // namespace cfpos

#endif
