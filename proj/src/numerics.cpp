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

#include "cfpos/numerics.hpp"
#include "cfpos/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

namespace cfpos
{

namespace
{
inline double conj(double x) { return x; }
inline cplx conj(const cplx &x) { return std::conj(x); }
inline double real_part(double x) { return x; }
inline double real_part(const cplx &x) { return x.real(); }
inline double abs2(double x) { return x * x; }
inline double abs2(const cplx &x) { return std::norm(x); }

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}
} // namespace

// ---------- dense helpers ----------

template <typename T>
Matrix<T> adjoint(const Matrix<T> &a)
{
    Matrix<T> out(a.cols(), a.rows());
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c)
            out(c, r) = conj(a(r, c));
    return out;
}

template <typename T>
Matrix<T> multiply(const Matrix<T> &a, const Matrix<T> &b)
{
    if (a.cols() != b.rows())
        throw std::invalid_argument("multiply: inner dimensions differ");
    Matrix<T> out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k)
        {
            const T aik = a(i, k);
            if (aik == T{})
                continue;
            auto brow = b.row(k);
            auto orow = out.row(i);
            for (std::size_t j = 0; j < b.cols(); ++j)
                orow[j] += aik * brow[j];
        }
    return out;
}

template <typename T>
double frobenius_norm(const Matrix<T> &a)
{
    double s = 0.0;
    for (const auto &v : a.data())
        s += abs2(v);
    return std::sqrt(s);
}

template RealMatrix adjoint(const RealMatrix &);
template ComplexMatrix adjoint(const ComplexMatrix &);
template RealMatrix multiply(const RealMatrix &, const RealMatrix &);
template ComplexMatrix multiply(const ComplexMatrix &, const ComplexMatrix &);
template double frobenius_norm(const RealMatrix &);
template double frobenius_norm(const ComplexMatrix &);

// ---------- Hermitian covariance ----------

double hermitian_asymmetry(const ComplexMatrix &a)
{
    if (a.rows() != a.cols())
        return std::numeric_limits<double>::infinity();
    double scale = 0.0, diff = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
        {
            scale = std::max(scale, std::abs(a(i, j)));
            diff = std::max(diff, std::abs(a(i, j) - std::conj(a(j, i))));
        }
    return scale > 0.0 ? diff / scale : 0.0;
}

HermitianCovariance::HermitianCovariance(ComplexMatrix m)
{
    const double asym = hermitian_asymmetry(m);
    if (!(asym <= 1e-8))
    {
        std::ostringstream msg;
        msg << "matrix is not Hermitian (relative asymmetry " << asym << ", " << m.rows() << "x" << m.cols() << ")";
        throw DomainError(msg.str());
    }
    for (std::size_t i = 0; i < m.rows(); ++i)
    {
        m(i, i) = cplx(m(i, i).real(), 0.0);
        for (std::size_t j = i + 1; j < m.cols(); ++j)
        {
            const cplx avg = 0.5 * (m(i, j) + std::conj(m(j, i)));
            m(i, j) = avg;
            m(j, i) = std::conj(avg);
        }
    }
    m_ = std::move(m);
}

double HermitianCovariance::trace() const
{
    double t = 0.0;
    for (std::size_t i = 0; i < m_.rows(); ++i)
        t += m_(i, i).real();
    return t;
}

// ---------- Hermitian eigendecomposition ----------

EigenDecomposition hermitian_eig(const ComplexMatrix &input)
{
    const std::size_t n = input.rows();
    if (n == 0 || input.cols() != n)
        throw DomainError("hermitian_eig: matrix must be square with dim >= 1");
    const double asym = hermitian_asymmetry(input);
    if (!(asym <= 1e-8))
    {
        std::ostringstream msg;
        msg << "hermitian_eig: input is not Hermitian (relative asymmetry " << asym << ")";
        throw DomainError(msg.str());
    }

    ComplexMatrix a = input;
    ComplexMatrix v = ComplexMatrix::identity(n);

    double total = 0.0;
    for (const auto &x : a.data())
        total += std::norm(x);
    const double tol = 1e-26 * total; // squared off-diagonal mass considered converged

    for (int sweep = 0; sweep < 100; ++sweep)
    {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q)
                off += std::norm(a(p, q));
        if (off <= tol)
            break;

        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q)
            {
                const double mag = std::abs(a(p, q));
                if (mag == 0.0)
                    continue;

                // Rotate the phase of index q so that a(p, q) becomes real and positive.
                const cplx phase = std::conj(a(p, q)) / mag; // e^{-i arg a_pq}
                for (std::size_t k = 0; k < n; ++k)
                {
                    a(k, q) *= phase;
                    v(k, q) *= phase;
                }
                for (std::size_t k = 0; k < n; ++k)
                    a(q, k) *= std::conj(phase);

                const double app = a(p, p).real();
                const double aqq = a(q, q).real();
                const double theta = (aqq - app) / (2.0 * mag);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                for (std::size_t k = 0; k < n; ++k)
                {
                    if (k == p || k == q)
                        continue;
                    const cplx akp = a(k, p), akq = a(k, q);
                    const cplx kp = c * akp - s * akq;
                    const cplx kq = s * akp + c * akq;
                    a(k, p) = kp;
                    a(k, q) = kq;
                    a(p, k) = std::conj(kp);
                    a(q, k) = std::conj(kq);
                }
                a(p, p) = app - t * mag;
                a(q, q) = aqq + t * mag;
                a(p, q) = 0.0;
                a(q, p) = 0.0;

                for (std::size_t k = 0; k < n; ++k)
                {
                    const cplx vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a(i, i).real() < a(j, j).real(); });

    EigenDecomposition out;
    out.values.resize(n);
    out.vectors = ComplexMatrix(n, n);
    for (std::size_t c = 0; c < n; ++c)
    {
        out.values[c] = a(order[c], order[c]).real();
        for (std::size_t r = 0; r < n; ++r)
            out.vectors(r, c) = v(r, order[c]);
    }
    return out;
}

EigenDecomposition hermitian_eig(const HermitianCovariance &a)
{
    return hermitian_eig(a.matrix());
}

// ---------- Cholesky ----------

namespace
{
template <typename T>
bool try_cholesky(const Matrix<T> &a, double jitter, double pivot_floor, Matrix<T> &lower)
{
    const std::size_t n = a.rows();
    lower = Matrix<T>(n, n);
    for (std::size_t j = 0; j < n; ++j)
    {
        auto lj = lower.row(j);
        double d = real_part(a(j, j)) + jitter;
        for (std::size_t k = 0; k < j; ++k)
            d -= abs2(lj[k]);
        if (!(d > pivot_floor))
            return false;
        const double ljj = std::sqrt(d);
        lj[j] = T{ljj};
        for (std::size_t i = j + 1; i < n; ++i)
        {
            auto li = lower.row(i);
            T s = a(i, j);
            for (std::size_t k = 0; k < j; ++k)
                s -= li[k] * conj(lj[k]);
            li[j] = s / ljj;
        }
    }
    return true;
}

template <typename T>
CholeskyFactor<T> cholesky_impl(const Matrix<T> &a)
{
    const std::size_t n = a.rows();
    if (n == 0 || a.cols() != n)
        throw DomainError("cholesky_psd: matrix must be square with dim >= 1");

    double trace = 0.0;
    bool all_zero = true;
    for (std::size_t i = 0; i < n; ++i)
        trace += real_part(a(i, i));
    for (const auto &x : a.data())
        if (x != T{})
        {
            all_zero = false;
            break;
        }
    CholeskyFactor<T> out;
    if (all_zero)
    {
        out.lower = Matrix<T>(n, n);
        return out;
    }

    // Jitter is relative to the mean diagonal; a matrix with non-positive trace falls back to its
    // largest entry so the escalation still probes a meaningful range before failing.
    double scale = trace / static_cast<double>(n);
    if (!(scale > 0.0))
    {
        scale = 0.0;
        for (const auto &x : a.data())
            scale = std::max(scale, std::abs(x));
    }
    const double pivot_floor = 1e-14 * scale;

    if (try_cholesky(a, 0.0, pivot_floor, out.lower))
        return out;
    double jitter = 1e-12 * scale;
    const double max_jitter = 1e-6 * scale * (1.0 + 1e-9);
    for (; jitter <= max_jitter; jitter *= 10.0)
        if (try_cholesky(a, jitter, pivot_floor, out.lower))
        {
            out.jitter = jitter;
            return out;
        }
    std::ostringstream msg;
    msg << "cholesky_psd: matrix is not PSD (dim " << n << ", attempted jitter up to " << jitter / 10.0 << ")";
    throw NotPsdError(msg.str(), jitter / 10.0);
}
} // namespace

CholeskyFactor<double> cholesky_psd(const RealMatrix &a) { return cholesky_impl(a); }
CholeskyFactor<cplx> cholesky_psd(const ComplexMatrix &a) { return cholesky_impl(a); }

template <typename T>
void solve_lower(const Matrix<T> &lower, std::span<T> b)
{
    const std::size_t n = lower.rows();
    for (std::size_t i = 0; i < n; ++i)
    {
        auto li = lower.row(i);
        T s = b[i];
        for (std::size_t k = 0; k < i; ++k)
            s -= li[k] * b[k];
        b[i] = s / li[i];
    }
}

template <typename T>
void solve_lower_adjoint(const Matrix<T> &lower, std::span<T> b)
{
    const std::size_t n = lower.rows();
    for (std::size_t ii = n; ii-- > 0;)
    {
        b[ii] /= conj(lower(ii, ii));
        const T bi = b[ii];
        auto li = lower.row(ii);
        for (std::size_t k = 0; k < ii; ++k)
            b[k] -= conj(li[k]) * bi;
    }
}

template void solve_lower(const RealMatrix &, std::span<double>);
template void solve_lower(const ComplexMatrix &, std::span<cplx>);
template void solve_lower_adjoint(const RealMatrix &, std::span<double>);
template void solve_lower_adjoint(const ComplexMatrix &, std::span<cplx>);

// ---------- Bessel ----------

namespace
{
double bessel_series(int order, double x)
{
    const double half = 0.5 * x;
    double term = 1.0;
    for (int k = 1; k <= order; ++k)
        term *= half / k; // (x/2)^n / n!
    double sum = term;
    const double h2 = half * half;
    for (int k = 1; k < 200; ++k)
    {
        term *= -h2 / (static_cast<double>(k) * static_cast<double>(k + order));
        sum += term;
        if (std::abs(term) < 1e-17 * std::max(1.0, std::abs(sum)))
            break;
    }
    return sum;
}

double bessel_asymptotic(int order, double x)
{
    const double mu = 4.0 * order * order;
    const double z8 = 8.0 * x;
    double p = 1.0, q = 0.0;
    double term = 1.0;
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 1; k < 60; ++k)
    {
        const double odd = 2.0 * k - 1.0;
        term *= (mu - odd * odd) / (k * z8);
        if (std::abs(term) > prev)
            break; // asymptotic series started diverging
        prev = std::abs(term);
        // terms alternate between Q (odd k) and P (even k) with sign pattern +,-,-,+ ...
        switch (k % 4)
        {
        case 1: q += term; break;
        case 2: p -= term; break;
        case 3: q -= term; break;
        case 0: p += term; break;
        }
        if (std::abs(term) < 1e-17)
            break;
    }
    const double chi = x - (0.5 * order + 0.25) * std::numbers::pi;
    return std::sqrt(2.0 / (std::numbers::pi * x)) * (p * std::cos(chi) - q * std::sin(chi));
}
} // namespace

double bessel_j(int order, double x)
{
    if (order < 0 || order > 2)
        throw DomainError("bessel_j: only orders 0, 1 and 2 are supported");
    const double ax = std::abs(x);
    const double v = ax <= 12.0 ? bessel_series(order, ax) : bessel_asymptotic(order, ax);
    return (order % 2 == 1 && x < 0.0) ? -v : v;
}

// ---------- random streams ----------

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id),
      engine_(splitmix64(splitmix64(seed) ^ splitmix64(stream_id + 0x632BE59BD9B4E019ULL)))
{
}

RngStream RngStream::derive(std::uint64_t child_id) const
{
    return RngStream(seed_, splitmix64(stream_id_ * 0x100000001B3ULL ^ splitmix64(child_id + 1)));
}

double RngStream::uniform()
{
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi)
{
    return lo + (hi - lo) * uniform();
}

double RngStream::normal()
{
    if (has_spare_)
    {
        has_spare_ = false;
        return spare_;
    }
    // Box-Muller; 1 - u keeps the logarithm argument in (0, 1].
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(ang);
    has_spare_ = true;
    return r * std::cos(ang);
}

cplx RngStream::complex_normal()
{
    const double re = normal();
    const double im = normal();
    return {re * std::numbers::sqrt2 * 0.5, im * std::numbers::sqrt2 * 0.5};
}

std::vector<cplx> sample_complex_gaussian(RngStream &rng, const ComplexMatrix &cov_factor)
{
    std::vector<cplx> g(cov_factor.cols());
    for (auto &x : g)
        x = rng.complex_normal();
    std::vector<cplx> out(cov_factor.rows());
    for (std::size_t r = 0; r < cov_factor.rows(); ++r)
    {
        auto fr = cov_factor.row(r);
        cplx s{};
        for (std::size_t c = 0; c < g.size(); ++c)
            s += fr[c] * g[c];
        out[r] = s;
    }
    return out;
}

} // namespace cfpos
