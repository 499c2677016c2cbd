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

#include <doctest.h>

#include "cfpos/channel.hpp"
#include "cfpos/errors.hpp"
#include "cfpos/music.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace cfpos;

namespace
{
HermitianCovariance rank_one_plus(double phi, std::size_t n, double noise)
{
    const auto a = steering_vector(phi, n, 0.5);
    ComplexMatrix m(n, n);
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = 0; q < n; ++q)
            m(p, q) = a[p] * std::conj(a[q]) + (p == q ? noise : 0.0);
    return HermitianCovariance(std::move(m));
}

ComplexMatrix unitary_mix(const ComplexMatrix &un, RngStream &rng)
{
    // Random unitary from the eigenvectors of a random Hermitian matrix.
    const std::size_t k = un.cols();
    const auto q = hermitian_eig(oracle::random_hermitian_psd(rng, k)).vectors;
    return multiply(un, q);
}

double median_error(std::vector<double> v)
{
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}
} // namespace

TEST_CASE("noise_subspace: orthogonal to the signal and orthonormal")
{
    const auto r = rank_one_plus(90.0, 4, 1.0);
    const auto un = noise_subspace(r);
    REQUIRE(un.rows() == 4);
    REQUIRE(un.cols() == 3);
    const auto a = steering_vector(90.0, 4, 0.5);
    for (std::size_t j = 0; j < 3; ++j)
    {
        cplx s{};
        for (std::size_t i = 0; i < 4; ++i)
            s += std::conj(un(i, j)) * a[i];
        CHECK(std::abs(s) < 1e-9);
    }
    const auto g = multiply(adjoint(un), un);
    CHECK(frobenius_norm(g) == doctest::Approx(std::sqrt(3.0)));
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(std::abs(g(i, j) - (i == j ? 1.0 : 0.0)) < 1e-12);

    const auto iso = noise_subspace(HermitianCovariance(ComplexMatrix::identity(5)));
    const auto gi = multiply(adjoint(iso), iso);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            CHECK(std::abs(gi(i, j) - (i == j ? 1.0 : 0.0)) < 1e-12);

    ComplexMatrix d(3, 3);
    d(0, 0) = 1.0;
    d(1, 1) = 3.0;
    d(2, 2) = 1.0;
    const auto ud = noise_subspace(HermitianCovariance(d));
    for (std::size_t j = 0; j < 2; ++j)
        CHECK(std::abs(ud(1, j)) < 1e-12);

    CHECK_THROWS_AS(noise_subspace(HermitianCovariance(ComplexMatrix(1, 1, 1.0))), DomainError);
}

TEST_CASE("pseudospectrum: exact peak, off-peak value and projector invariance")
{
    const std::size_t n = 8;
    const double phi = 63.0;
    ComplexMatrix signal(n, n);
    const auto a = steering_vector(phi, n, 0.5);
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = 0; q < n; ++q)
            signal(p, q) = a[p] * std::conj(a[q]);
    const auto un = noise_subspace(HermitianCovariance(signal));
    CHECK(pseudospectrum(un, phi, 0.5) > 1e12);

    // Direct evaluation: a^H (I - a a^H / N) a at another angle.
    const auto b = steering_vector(phi + 90.0, n, 0.5);
    cplx ab{};
    for (std::size_t i = 0; i < n; ++i)
        ab += std::conj(a[i]) * b[i];
    const double expected = 1.0 / (static_cast<double>(n) - std::norm(ab) / static_cast<double>(n));
    CHECK(pseudospectrum(un, phi + 90.0, 0.5) == doctest::Approx(expected).epsilon(1e-10));
    CHECK(expected < 1.0);

    RngStream rng(8, 8);
    const auto mixed = unitary_mix(un, rng);
    for (double t : {0.0, 20.0, 63.5, 100.0, 180.0})
        CHECK(pseudospectrum(mixed, t, 0.5) == doctest::Approx(pseudospectrum(un, t, 0.5)).epsilon(1e-9));

    const auto noisy = noise_subspace(rank_one_plus(phi, n, 0.1));
    for (double t : {0.0, 45.0, 90.0, 135.0})
        CHECK(pseudospectrum(noisy, t, 0.5) > 0.0);
}

TEST_CASE("estimate_aoa: noiseless single path for every 10 degree angle")
{
    const MusicConfig cfg;
    for (int k = 1; k <= 17; ++k)
    {
        const double phi = 10.0 * k;
        const auto cov = disk_scattering_cov(1e-10, phi, 25, 0.5, 0.0).cov;
        const auto est = estimate_aoa(cov, cfg, +1, 0.5);
        CHECK(std::abs(est.angle_deg - phi) <= cfg.grid_step_deg);
        CHECK(est.peak_value > 0.0);
        CHECK_FALSE(est.low_confidence);
    }
}

TEST_CASE("estimate_aoa: side hint mirrors the estimate")
{
    const MusicConfig cfg;
    const auto cov = rank_one_plus(47.3, 25, 0.01);
    const auto up = estimate_aoa(cov, cfg, +1, 0.5);
    const auto down = estimate_aoa(cov, cfg, -1, 0.5);
    CHECK(up.angle_deg == doctest::Approx(47.3).epsilon(0.1 / 47.3));
    CHECK(down.angle_deg == -up.angle_deg);
    CHECK(up.refined);

    MusicConfig coarse;
    coarse.refine = false;
    coarse.grid_step_deg = 0.5;
    const auto grid_only = estimate_aoa(cov, coarse, +1, 0.5);
    CHECK(grid_only.angle_deg == 47.5);
    CHECK_FALSE(grid_only.refined);
    CHECK(grid_only.grid_step_deg == 0.5);

    // At half-wavelength spacing 0 and 180 degrees share a steering vector; either way the
    // mirrored estimate must stay on the (-180, 180] convention.
    const auto endfire = estimate_aoa(rank_one_plus(180.0, 8, 0.01), coarse, -1, 0.5);
    CHECK((endfire.angle_deg == 180.0 || endfire.angle_deg == 0.0));
}

TEST_CASE("estimate_aoa: refinement is closer than the grid point for off-grid angles")
{
    MusicConfig refine, plain;
    plain.refine = false;
    refine.grid_step_deg = plain.grid_step_deg = 1.0;
    for (double phi : {33.37, 71.6, 104.42, 140.81})
    {
        const auto cov = rank_one_plus(phi, 16, 0.05);
        const double e_plain = std::abs(estimate_aoa(cov, plain, +1, 0.5).angle_deg - phi);
        const double e_ref = std::abs(estimate_aoa(cov, refine, +1, 0.5).angle_deg - phi);
        CHECK(e_ref < e_plain);
        CHECK(e_ref < 0.05);
    }
}

TEST_CASE("estimate_aoa: invariance to scaling and to an isotropic shift")
{
    const MusicConfig cfg;
    RngStream rng(3, 3);
    RadioParams radio;
    radio.n_samples = 200;
    LinkStats link;
    link.beta_linear = 1e-10;
    link.nominal_aoa_deg = 71.0;
    link.channel_cov = disk_scattering_cov(1e-10, 71.0, 16, 0.5, 10.0).cov;
    const auto r = estimate_sample_cov(synthesize_samples(link, radio, rng)).cov;
    const double base = estimate_aoa(r, cfg, +1, 0.5).angle_deg;

    for (double c : {1e-6, 3.0, 1e8})
    {
        ComplexMatrix m = r.matrix();
        for (auto &v : m.data())
            v *= c;
        CHECK(estimate_aoa(HermitianCovariance(m), cfg, +1, 0.5).angle_deg == doctest::Approx(base).epsilon(1e-9));
    }
    ComplexMatrix shifted = r.matrix();
    for (std::size_t i = 0; i < 16; ++i)
        shifted(i, i) += 2.0 * radio.noise_power_mw;
    CHECK(estimate_aoa(HermitianCovariance(shifted), cfg, +1, 0.5).angle_deg ==
          doctest::Approx(base).epsilon(1e-6));
}

TEST_CASE("estimate_aoa: flat spectrum is flagged")
{
    const auto est = estimate_aoa(HermitianCovariance(ComplexMatrix::identity(6)), MusicConfig{}, +1, 0.5);
    CHECK(est.low_confidence);
}

TEST_CASE("estimate_aoa: median error is non-increasing in the sample count")
{
    const MusicConfig cfg;
    RadioParams radio;
    radio.tx_power_mw = 1.0;
    radio.noise_power_mw = 1.0;
    RngStream rng(2024, 0);
    std::vector<double> medians;
    for (std::size_t s : {10u, 50u, 200u, 1000u})
    {
        radio.n_samples = s;
        std::vector<double> err;
        for (int t = 0; t < 300; ++t)
        {
            const double phi = rng.uniform(20.0, 160.0);
            LinkStats link;
            link.beta_linear = 0.1;
            link.channel_cov = disk_scattering_cov(0.1, phi, 8, 0.5, 0.0).cov;
            const auto r = estimate_sample_cov(synthesize_samples(link, radio, rng)).cov;
            err.push_back(std::abs(estimate_aoa(r, cfg, +1, 0.5).angle_deg - phi));
        }
        medians.push_back(median_error(err));
    }
    int inversions = 0;
    for (std::size_t i = 1; i < medians.size(); ++i)
        inversions += medians[i] > medians[i - 1];
    CHECK(inversions <= 1);
    CHECK(medians.back() < medians.front());
}

TEST_CASE("pseudospectrum trace and CSV dump")
{
    MusicConfig cfg;
    cfg.grid_step_deg = 0.7; // 180 is not a multiple of the step; the endpoint is appended
    const auto trace = pseudospectrum_trace(rank_one_plus(30.0, 4, 0.1), cfg, 0.5);
    CHECK(trace.front().first == 0.0);
    CHECK(trace.back().first == 180.0);
    CHECK(trace.size() == 259);

    const auto path = (std::filesystem::temp_directory_path() / "cfpos_music_trace.csv").string();
    write_pseudospectrum_csv(path, trace);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "theta_deg,value");
    std::size_t lines = 0;
    for (std::string line; std::getline(in, line);)
        ++lines;
    CHECK(lines == trace.size());
    std::filesystem::remove(path);

    CHECK_THROWS_AS(write_pseudospectrum_csv("/nonexistent-dir/x.csv", trace), IoError);
}

TEST_CASE("MusicConfig validation")
{
    MusicConfig cfg;
    cfg.grid_step_deg = 0.0;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg.grid_step_deg = 1.5;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg.grid_step_deg = 1.0;
    cfg.n_sources = 2;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
}
