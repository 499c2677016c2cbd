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

// Test-only reference computations. Nothing here calls into the library code paths
// it is used to check, apart from RngStream for generating inputs.

#ifndef CFPOS_TESTS_ORACLES_HPP
#define CFPOS_TESTS_ORACLES_HPP

#include "cfpos/numerics.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace oracle
{

using cfpos::ComplexMatrix;
using cfpos::cplx;
using cfpos::RealMatrix;
using cfpos::RngStream;

// J_n(x) from the ascending series in extended precision, for any order n >= 0.
inline long double bessel_series_ld(int n, long double x)
{
    const long double half = x / 2.0L;
    long double term = 1.0L;
    for (int k = 1; k <= n; ++k)
        term *= half / k;
    long double sum = term;
    for (int k = 1; k < 400; ++k)
    {
        term *= -(half * half) / (static_cast<long double>(k) * (k + n));
        sum += term;
        if (std::fabs(term) < 1e-22L)
            break;
    }
    return sum;
}

// B B^H with B having i.i.d. CN(0,1) entries.
inline ComplexMatrix random_hermitian_psd(RngStream &rng, std::size_t n)
{
    ComplexMatrix b(n, n);
    for (auto &x : b.data())
        x = rng.complex_normal();
    ComplexMatrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
        {
            cplx s{};
            for (std::size_t k = 0; k < n; ++k)
                s += b(i, k) * std::conj(b(j, k));
            a(i, j) = s;
        }
    return a;
}

inline RealMatrix random_spd(RngStream &rng, std::size_t n)
{
    RealMatrix b(n, n);
    for (auto &x : b.data())
        x = rng.normal();
    RealMatrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j)
        {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k)
                s += b(i, k) * b(j, k);
            a(i, j) = s;
            a(j, i) = s;
        }
    for (std::size_t i = 0; i < n; ++i)
        a(i, i) += 1e-3 * n;
    return a;
}

// Dense Gauss-Jordan solve with partial pivoting (real), independent of the Cholesky path.
inline std::vector<double> gauss_solve(RealMatrix a, std::vector<double> b)
{
    const std::size_t n = a.rows();
    for (std::size_t c = 0; c < n; ++c)
    {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::fabs(a(r, c)) > std::fabs(a(piv, c)))
                piv = r;
        if (piv != c)
        {
            for (std::size_t k = 0; k < n; ++k)
                std::swap(a(c, k), a(piv, k));
            std::swap(b[c], b[piv]);
        }
        for (std::size_t r = 0; r < n; ++r)
        {
            if (r == c)
                continue;
            const double f = a(r, c) / a(c, c);
            for (std::size_t k = c; k < n; ++k)
                a(r, k) -= f * a(c, k);
            b[r] -= f * b[c];
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        b[i] /= a(i, i);
    return b;
}

// log det of a symmetric positive definite matrix by Gaussian elimination without pivoting.
inline double log_det_spd(RealMatrix a)
{
    const std::size_t n = a.rows();
    double ld = 0.0;
    for (std::size_t c = 0; c < n; ++c)
    {
        ld += std::log(a(c, c));
        for (std::size_t r = c + 1; r < n; ++r)
        {
            const double f = a(r, c) / a(c, c);
            for (std::size_t k = c; k < n; ++k)
                a(r, k) -= f * a(c, k);
        }
    }
    return ld;
}

// Squared-exponential covariance written out from its definition.
inline double se(const std::vector<double> &a, const std::vector<double> &b, double b2, double rho)
{
    double d2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        d2 += (a[i] - b[i]) * (a[i] - b[i]);
    return b2 * std::exp(-d2 / (2.0 * rho));
}

struct GaussianConditional
{
    double mean = 0.0;
    double variance = 0.0;
};

// Builds the (K+1)-dimensional joint Gaussian of the noisy training labels and the latent value at
// x_star, then conditions on the labels with a dense Gauss-Jordan solve.
inline GaussianConditional gp_condition(const std::vector<std::vector<double>> &x, const std::vector<double> &y,
                                        const std::vector<double> &x_star, double b2, double rho, double noise)
{
    const std::size_t k = x.size();
    RealMatrix joint(k + 1, k + 1);
    std::vector<std::vector<double>> pts = x;
    pts.push_back(x_star);
    for (std::size_t i = 0; i <= k; ++i)
        for (std::size_t j = 0; j <= k; ++j)
            joint(i, j) = se(pts[i], pts[j], b2, rho) + (i == j && i < k ? noise : 0.0);

    RealMatrix a(k, k);
    std::vector<double> cross(k);
    for (std::size_t i = 0; i < k; ++i)
    {
        for (std::size_t j = 0; j < k; ++j)
            a(i, j) = joint(i, j);
        cross[i] = joint(i, k);
    }
    const auto w_y = gauss_solve(a, y);
    const auto w_c = gauss_solve(a, cross);
    GaussianConditional g;
    g.variance = joint(k, k);
    for (std::size_t i = 0; i < k; ++i)
    {
        g.mean += cross[i] * w_y[i];
        g.variance -= cross[i] * w_c[i];
    }
    return g;
}

// Log marginal likelihood of y under N(0, K + noise I), from the dense definition.
inline double gp_log_likelihood(const std::vector<std::vector<double>> &x, const std::vector<double> &y, double b2,
                                double rho, double noise)
{
    const std::size_t k = x.size();
    RealMatrix a(k, k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
            a(i, j) = se(x[i], x[j], b2, rho) + (i == j ? noise : 0.0);
    const auto w = gauss_solve(a, y);
    double quad = 0.0;
    for (std::size_t i = 0; i < k; ++i)
        quad += y[i] * w[i];
    return -0.5 * quad - 0.5 * log_det_spd(a) - 0.5 * k * std::log(2.0 * std::numbers::pi);
}

// Composite Simpson quadrature on [lo, hi] with an even number of panels.
template <typename F>
auto simpson(F f, double lo, double hi, int panels)
{
    if (panels % 2)
        ++panels;
    const double h = (hi - lo) / panels;
    auto s = f(lo) + f(hi);
    for (int i = 1; i < panels; ++i)
        s += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * (h / 3.0);
}

} // namespace oracle

#endif
