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

#ifndef CFPOS_NUMERICS_HPP
#define CFPOS_NUMERICS_HPP

#include <complex>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace cfpos
{

using cplx = std::complex<double>;

// Dense row-major matrix. Only the handful of kernels the toolkit needs are provided;
// this is not a general linear algebra type.
template <typename T>
class Matrix
{
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n)
    {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i)
            m(i, i) = T{1};
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    T &operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T &operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<T> &data() noexcept { return data_; }
    const std::vector<T> &data() const noexcept { return data_; }

    std::vector<T> column(std::size_t c) const
    {
        std::vector<T> out(rows_);
        for (std::size_t r = 0; r < rows_; ++r)
            out[r] = (*this)(r, c);
        return out;
    }

    bool operator==(const Matrix &) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

using RealMatrix = Matrix<double>;
using ComplexMatrix = Matrix<cplx>;

// Conjugate transpose (plain transpose for real matrices).
template <typename T>
Matrix<T> adjoint(const Matrix<T> &a);

template <typename T>
Matrix<T> multiply(const Matrix<T> &a, const Matrix<T> &b);

template <typename T>
double frobenius_norm(const Matrix<T> &a);

// N x N complex Hermitian positive semi-definite matrix.
// Construction symmetrizes the input after checking that it is Hermitian to 1e-8 relative.
class HermitianCovariance
{
public:
    HermitianCovariance() = default;
    explicit HermitianCovariance(ComplexMatrix m);

    std::size_t dim() const noexcept { return m_.rows(); }
    const ComplexMatrix &matrix() const noexcept { return m_; }
    const cplx &operator()(std::size_t r, std::size_t c) const { return m_(r, c); }
    double trace() const;

private:
    ComplexMatrix m_;
};

// Relative asymmetry max|a_ij - conj(a_ji)| / max|a_ij| (0 for the zero matrix).
double hermitian_asymmetry(const ComplexMatrix &a);

struct EigenDecomposition
{
    std::vector<double> values; // ascending
    ComplexMatrix vectors;      // column i belongs to values[i]
};

// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
// Throws DomainError when the relative asymmetry exceeds 1e-8.
EigenDecomposition hermitian_eig(const ComplexMatrix &a);
EigenDecomposition hermitian_eig(const HermitianCovariance &a);

template <typename T>
struct CholeskyFactor
{
    Matrix<T> lower; // L with L * L^H = A + jitter * I
    double jitter = 0.0;
};

// Cholesky factorization with geometric diagonal jitter escalation.
// First attempt without jitter, then 1e-12, 1e-11, ... up to 1e-6 times trace/dim.
// The zero matrix factors to the zero matrix. Throws NotPsdError when every attempt fails.
CholeskyFactor<double> cholesky_psd(const RealMatrix &a);
CholeskyFactor<cplx> cholesky_psd(const ComplexMatrix &a);

// Solves L x = b in place (forward substitution) for a lower-triangular L.
template <typename T>
void solve_lower(const Matrix<T> &lower, std::span<T> b);

// Solves L^H x = b in place (back substitution).
template <typename T>
void solve_lower_adjoint(const Matrix<T> &lower, std::span<T> b);

// Bessel function of the first kind for order 0, 1 or 2.
// Ascending series for |x| <= 12, Hankel asymptotic expansion beyond.
double bessel_j(int order, double x);

// Deterministic random stream identified by (seed, stream id).
// Uses mt19937_64 (bit-exact across standard libraries) with inverse-free transforms,
// so identical ids reproduce identical sequences everywhere.
class RngStream
{
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }

    // Child stream for independent work units; depends only on (seed, stream id, child id).
    RngStream derive(std::uint64_t child_id) const;

    std::uint64_t next_u64() { return engine_(); }
    double uniform();                   // [0, 1)
    double uniform(double lo, double hi);
    double normal();                    // N(0, 1)
    cplx complex_normal();              // CN(0, 1): real and imaginary parts each N(0, 1/2)

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Returns F * g with g ~ CN(0, I) of length F.cols().
std::vector<cplx> sample_complex_gaussian(RngStream &rng, const ComplexMatrix &cov_factor);

} // namespace cfpos

#endif
