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

#include "cfpos/music.hpp"
#include "cfpos/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numbers>

namespace cfpos
{

namespace
{
constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kDenominatorFloor = 1.0 / kPseudospectrumCap;
constexpr double kFlatRatio = 1.5;

std::vector<double> search_grid(double step)
{
    const auto count = static_cast<std::size_t>(std::floor(180.0 / step + 1e-9));
    std::vector<double> grid;
    grid.reserve(count + 2);
    for (std::size_t k = 0; k <= count; ++k)
        grid.push_back(static_cast<double>(k) * step);
    if (grid.back() < 180.0 - 1e-9)
        grid.push_back(180.0);
    return grid;
}

// u^H a(theta) by Horner's rule in z = exp(-j 2 pi spacing cos(theta)).
cplx project(std::span<const cplx> u, double theta_deg, double spacing)
{
    const cplx z = std::polar(1.0, -2.0 * std::numbers::pi * spacing * std::cos(theta_deg * kDeg));
    cplx s = std::conj(u.back());
    for (std::size_t n = u.size() - 1; n-- > 0;)
        s = s * z + std::conj(u[n]);
    return s;
}

double to_spectrum(double denominator)
{
    return denominator < kDenominatorFloor ? kPseudospectrumCap : 1.0 / denominator;
}

// Single source: a^H Un Un^H a = ||a||^2 - |u_1^H a|^2 with u_1 the dominant eigenvector.
std::vector<double> denominators(const HermitianCovariance &r, const std::vector<double> &grid, double spacing)
{
    const std::size_t n = r.dim();
    if (n < 2)
        throw DomainError("MUSIC: at least 2 antennas are required");
    const auto eig = hermitian_eig(r);
    const std::vector<cplx> u = eig.vectors.column(n - 1);
    std::vector<double> den(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k)
        den[k] = std::max(0.0, static_cast<double>(n) - std::norm(project(u, grid[k], spacing)));
    return den;
}
} // namespace

void validate(const MusicConfig &cfg)
{
    if (!(cfg.grid_step_deg > 0.0) || cfg.grid_step_deg > 1.0)
        throw ConfigError("MUSIC grid step must lie in (0, 1] degrees");
    if (cfg.n_sources != 1)
        throw ConfigError("MUSIC supports a single source only");
}

ComplexMatrix noise_subspace(const HermitianCovariance &r)
{
    const std::size_t n = r.dim();
    if (n < 2)
        throw DomainError("noise_subspace: at least 2 antennas are required");
    const auto eig = hermitian_eig(r);
    ComplexMatrix un(n, n - 1);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j + 1 < n; ++j)
            un(i, j) = eig.vectors(i, j);
    return un;
}

double pseudospectrum(const ComplexMatrix &un, double theta_deg, double spacing)
{
    const std::size_t n = un.rows();
    const double k = -2.0 * std::numbers::pi * spacing * std::cos(theta_deg * kDeg);
    double den = 0.0;
    for (std::size_t j = 0; j < un.cols(); ++j)
    {
        cplx s{};
        for (std::size_t i = 0; i < n; ++i)
            s += std::conj(un(i, j)) * std::polar(1.0, k * static_cast<double>(i));
        den += std::norm(s);
    }
    return to_spectrum(den);
}

AoaEstimate estimate_aoa(const HermitianCovariance &r, const MusicConfig &cfg, int side_hint, double spacing)
{
    validate(cfg);
    const auto grid = search_grid(cfg.grid_step_deg);
    const auto den = denominators(r, grid, spacing);

    const std::size_t best =
        static_cast<std::size_t>(std::min_element(den.begin(), den.end()) - den.begin());

    AoaEstimate est;
    est.grid_step_deg = cfg.grid_step_deg;
    double theta = grid[best];
    est.peak_value = to_spectrum(den[best]);

    // The denominator is quadratic in theta near its minimum, so the parabola is fitted to it directly.
    if (cfg.refine && best > 0 && best + 1 < grid.size() && den[best] >= kDenominatorFloor)
    {
        const double dm = den[best - 1], d0 = den[best], dp = den[best + 1];
        const double curvature = dm - 2.0 * d0 + dp;
        const double h = grid[best + 1] - grid[best];
        if (curvature > 0.0 && std::abs(grid[best] - grid[best - 1] - h) < 1e-9)
        {
            const double offset = std::clamp(0.5 * (dm - dp) / curvature, -0.5, 0.5);
            theta += offset * h;
            est.peak_value = to_spectrum(std::max(d0 - 0.25 * (dm - dp) * offset, 0.0));
            est.refined = true;
        }
    }

    std::vector<double> sorted = den;
    auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2);
    std::nth_element(sorted.begin(), mid, sorted.end());
    est.low_confidence = to_spectrum(den[best]) < kFlatRatio * to_spectrum(*mid);

    if (side_hint < 0 && theta > 0.0 && theta < 180.0)
        theta = -theta;
    est.angle_deg = theta;
    return est;
}

std::vector<std::pair<double, double>> pseudospectrum_trace(const HermitianCovariance &r, const MusicConfig &cfg,
                                                            double spacing)
{
    validate(cfg);
    const auto grid = search_grid(cfg.grid_step_deg);
    const auto den = denominators(r, grid, spacing);
    std::vector<std::pair<double, double>> trace(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k)
        trace[k] = {grid[k], to_spectrum(den[k])};
    return trace;
}

void write_pseudospectrum_csv(const std::string &path, const std::vector<std::pair<double, double>> &trace)
{
    std::unique_ptr<std::FILE, int (*)(std::FILE *)> f(std::fopen(path.c_str(), "w"), &std::fclose);
    if (!f)
        throw IoError("cannot open " + path + " for writing");
    std::fputs("theta_deg,value\n", f.get());
    for (const auto &[theta, value] : trace)
        std::fprintf(f.get(), "%.9g,%.9g\n", theta, value);
    if (std::ferror(f.get()))
        throw IoError("write failed: " + path);
}

} // namespace cfpos
