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

#include "cfpos/channel.hpp"
#include "cfpos/errors.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace cfpos
{

namespace
{
constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kMaxSpreadDeg = 15.0;
} // namespace

void validate(const PathLossParams &p)
{
    if (!(p.gamma > 0.0) || !(p.d0 > 0.0) || !(p.sigma_sf_db >= 0.0) || !(p.d_corr > 0.0) || !std::isfinite(p.p0_db))
        throw ConfigError("path loss parameters: need gamma > 0, d0 > 0, sigma_sf_db >= 0, d_corr > 0");
}

void validate(const RadioParams &r)
{
    if (!(r.tx_power_mw > 0.0) || !(r.noise_power_mw > 0.0) || r.pilot_len == 0 || r.n_samples == 0 ||
        !(r.angular_spread_deg >= 0.0))
        throw ConfigError("radio parameters: powers, pilot length and sample count must be positive");
}

double path_loss_beta_db(double distance, const PathLossParams &params, double shadow_db)
{
    if (!(distance > 0.0))
        throw DomainError("path_loss_beta_db: distance must be positive");
    return params.p0_db - 10.0 * params.gamma * std::log10(distance / params.d0) + shadow_db;
}

RealMatrix shadow_covariance(std::span<const Position2D> points, double sigma_sf_db, double d_corr)
{
    const std::size_t m = points.size();
    const double var = sigma_sf_db * sigma_sf_db;
    RealMatrix cov(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j <= i; ++j)
        {
            const double dist = std::hypot(points[i].x - points[j].x, points[i].y - points[j].y);
            const double c = var * std::exp2(-dist / d_corr);
            cov(i, j) = c;
            cov(j, i) = c;
        }
    return cov;
}

ShadowField sample_shadow_field(std::span<const Position2D> points, std::size_t n_aps, double sigma_sf_db,
                                double d_corr, RngStream &rng)
{
    if (points.empty())
        throw ConfigError("sample_shadow_field: point list is empty");
    if (!(d_corr > 0.0) || !(sigma_sf_db >= 0.0))
        throw ConfigError("sample_shadow_field: need d_corr > 0 and sigma_sf_db >= 0");

    const std::size_t m = points.size();
    const auto factor = cholesky_psd(shadow_covariance(points, sigma_sf_db, d_corr));

    ShadowField field;
    field.points.assign(points.begin(), points.end());
    field.values_db.assign(n_aps, std::vector<double>(m, 0.0));
    std::vector<double> z(m);
    for (std::size_t ap = 0; ap < n_aps; ++ap)
    {
        for (auto &v : z)
            v = rng.normal();
        auto &out = field.values_db[ap];
        for (std::size_t i = 0; i < m; ++i)
        {
            auto li = factor.lower.row(i);
            double s = 0.0;
            for (std::size_t k = 0; k <= i; ++k)
                s += li[k] * z[k];
            out[i] = s;
        }
    }
    return field;
}

std::vector<cplx> steering_vector(double theta_deg, std::size_t n_antennas, double spacing)
{
    std::vector<cplx> a(n_antennas);
    const double k = -2.0 * std::numbers::pi * spacing * std::cos(theta_deg * kDeg);
    for (std::size_t n = 0; n < n_antennas; ++n)
        a[n] = std::polar(1.0, k * static_cast<double>(n));
    return a;
}

CovarianceResult disk_scattering_cov(double beta_linear, double nominal_aoa_deg, std::size_t n_antennas,
                                     double spacing, double delta_deg)
{
    if (n_antennas < 2)
        throw DomainError("disk_scattering_cov: at least 2 antennas are required");
    if (!(delta_deg >= 0.0) || !(beta_linear >= 0.0))
        throw DomainError("disk_scattering_cov: spread and gain must be non-negative");

    const double zeta = 2.0 * std::numbers::pi * spacing * (delta_deg * kDeg) * std::sin(nominal_aoa_deg * kDeg);
    const double phase_step = -2.0 * std::numbers::pi * spacing * std::cos(nominal_aoa_deg * kDeg);

    // Entries depend only on the lag p - q.
    std::vector<cplx> lag(n_antennas);
    for (std::size_t l = 0; l < n_antennas; ++l)
    {
        const double x = static_cast<double>(l) * zeta;
        const double g = l == 0 ? 1.0 : bessel_j(0, x) + bessel_j(2, x);
        lag[l] = beta_linear * g * std::polar(1.0, phase_step * static_cast<double>(l));
    }

    ComplexMatrix m(n_antennas, n_antennas);
    for (std::size_t p = 0; p < n_antennas; ++p)
        for (std::size_t q = 0; q < n_antennas; ++q)
            m(p, q) = p >= q ? lag[p - q] : std::conj(lag[q - p]);

    CovarianceResult out{HermitianCovariance(std::move(m)), false, {}};
    if (delta_deg > kMaxSpreadDeg)
    {
        out.warning = true;
        std::ostringstream note;
        note << "angular spread " << delta_deg << " deg exceeds the small-angle validity range (" << kMaxSpreadDeg
             << " deg)";
        out.note = note.str();
    }
    return out;
}

LinkStats make_link_stats(const ApSite &ap, const Position2D &ue, double ue_height, const PathLossParams &pathloss,
                          const RadioParams &radio, double shadow_db)
{
    LinkStats link;
    const double d = distance_3d(ap, ue, ue_height);
    link.beta_linear = db_to_linear(path_loss_beta_db(d, pathloss, shadow_db));
    link.nominal_aoa_deg = nominal_aoa(ap, ue);
    link.channel_cov = disk_scattering_cov(link.beta_linear, link.nominal_aoa_deg, ap.antenna_count,
                                           ap.element_spacing, radio.angular_spread_deg)
                           .cov;
    return link;
}

namespace
{
// Y_s = sqrt(rho) h_s 1_z^T + W_s written into the column block of sample s.
void write_sample_block(ComplexMatrix &y, std::size_t s, std::span<const cplx> h, double sqrt_rho,
                        double noise_std, std::size_t z, RngStream &rng)
{
    const std::size_t n = y.rows();
    for (std::size_t t = 0; t < z; ++t)
    {
        const std::size_t col = s * z + t;
        for (std::size_t r = 0; r < n; ++r)
        {
            cplx v = sqrt_rho * h[r];
            if (noise_std > 0.0)
                v += noise_std * rng.complex_normal();
            y(r, col) = v;
        }
    }
}
} // namespace

SampleBatch synthesize_samples(const LinkStats &link, const RadioParams &radio, RngStream &rng)
{
    if (radio.n_samples == 0 || radio.pilot_len == 0)
        throw ConfigError("synthesize_samples: sample count and pilot length must be positive");
    const std::size_t n = link.channel_cov.dim();
    const auto factor = cholesky_psd(link.channel_cov.matrix());
    const ComplexMatrix &f = factor.lower;
    const double sqrt_rho = std::sqrt(radio.tx_power_mw);
    const double noise_std = std::sqrt(radio.noise_power_mw);

    SampleBatch batch;
    batch.pilot_len = radio.pilot_len;
    batch.samples = ComplexMatrix(n, radio.n_samples * radio.pilot_len);
    std::vector<cplx> g(n), h(n);
    for (std::size_t s = 0; s < radio.n_samples; ++s)
    {
        for (auto &x : g)
            x = rng.complex_normal();
        for (std::size_t r = 0; r < n; ++r)
        {
            auto fr = f.row(r);
            cplx acc{};
            for (std::size_t c = 0; c <= r; ++c)
                acc += fr[c] * g[c];
            h[r] = acc;
        }
        write_sample_block(batch.samples, s, h, sqrt_rho, noise_std, radio.pilot_len, rng);
    }
    return batch;
}

SampleBatch synthesize_samples_path_sum(double beta_linear, double nominal_aoa_deg, std::size_t n_antennas,
                                        double spacing, const RadioParams &radio, std::size_t n_paths,
                                        RngStream &rng)
{
    if (n_paths == 0)
        throw ConfigError("synthesize_samples_path_sum: at least one path is required");
    const double sqrt_rho = std::sqrt(radio.tx_power_mw);
    const double noise_std = std::sqrt(radio.noise_power_mw);
    const double amp = std::sqrt(beta_linear / static_cast<double>(n_paths));

    SampleBatch batch;
    batch.pilot_len = radio.pilot_len;
    batch.samples = ComplexMatrix(n_antennas, radio.n_samples * radio.pilot_len);
    std::vector<cplx> h(n_antennas);
    for (std::size_t s = 0; s < radio.n_samples; ++s)
    {
        std::fill(h.begin(), h.end(), cplx{});
        for (std::size_t m = 0; m < n_paths; ++m)
        {
            // Scatterer uniform on the unit disk; its offset perpendicular to the link follows the semicircle law.
            const double r = std::sqrt(rng.uniform());
            const double psi = 2.0 * std::numbers::pi * rng.uniform();
            const double offset_deg = radio.angular_spread_deg * r * std::sin(psi);
            const cplx alpha = rng.complex_normal();
            const auto a = steering_vector(nominal_aoa_deg + offset_deg, n_antennas, spacing);
            for (std::size_t k = 0; k < n_antennas; ++k)
                h[k] += amp * alpha * a[k];
        }
        write_sample_block(batch.samples, s, h, sqrt_rho, noise_std, radio.pilot_len, rng);
    }
    return batch;
}

double estimate_rss_db(const SampleBatch &batch, double rho)
{
    if (batch.n_samples() == 0)
        throw ConfigError("estimate_rss_db: empty batch");
    double energy = 0.0;
    for (const auto &v : batch.samples.data())
        energy += std::norm(v);
    if (!(energy > 0.0))
        throw ConfigError("estimate_rss_db: batch carries no energy (zero signal and zero noise)");
    return linear_to_db(energy / static_cast<double>(batch.n_samples()) / rho);
}

CovarianceResult estimate_sample_cov(const SampleBatch &batch)
{
    const std::size_t n = batch.n_antennas();
    const std::size_t cols = batch.samples.cols();
    const std::size_t s_count = batch.n_samples();
    if (n == 0 || s_count == 0)
        throw ConfigError("estimate_sample_cov: empty batch");

    ComplexMatrix r(n, n);
    const auto &y = batch.samples;
    for (std::size_t p = 0; p < n; ++p)
    {
        auto yp = y.row(p);
        for (std::size_t q = 0; q <= p; ++q)
        {
            auto yq = y.row(q);
            cplx acc{};
            for (std::size_t c = 0; c < cols; ++c)
                acc += yp[c] * std::conj(yq[c]);
            acc /= static_cast<double>(s_count);
            r(p, q) = acc;
            r(q, p) = std::conj(acc);
        }
        r(p, p) = cplx(r(p, p).real(), 0.0);
    }

    CovarianceResult out{HermitianCovariance(std::move(r)), false, {}};
    if (s_count < n)
    {
        out.warning = true;
        out.note = "fewer samples than antennas: sample covariance is rank deficient";
    }
    return out;
}

nlohmann::json link_stats_to_json(const LinkStats &link)
{
    nlohmann::json cov = nlohmann::json::array();
    const auto &m = link.channel_cov.matrix();
    for (std::size_t r = 0; r < m.rows(); ++r)
    {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t c = 0; c < m.cols(); ++c)
            row.push_back({m(r, c).real(), m(r, c).imag()});
        cov.push_back(std::move(row));
    }
    return {{"beta_linear", link.beta_linear},
            {"beta_db", linear_to_db(link.beta_linear)},
            {"nominal_aoa_deg", link.nominal_aoa_deg},
            {"channel_cov", std::move(cov)}};
}

} // namespace cfpos
