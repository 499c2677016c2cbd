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

#include "cfpos/errors.hpp"
#include "cfpos/gpr.hpp"
#include "gp_checks.hpp"
#include "oracles.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

using namespace cfpos;

namespace
{
FeatureMatrix features(const RealMatrix &x)
{
    return {x, std::vector<ColumnKind>(x.cols(), ColumnKind::other)};
}

FeatureMatrix random_features(RngStream &rng, std::size_t k, std::size_t d)
{
    RealMatrix x(k, d);
    for (auto &v : x.data())
        v = rng.normal();
    return features(x);
}

std::vector<Position2D> random_labels(RngStream &rng, std::size_t k)
{
    std::vector<Position2D> q(k);
    for (auto &p : q)
        p = {rng.uniform(0, 200), rng.uniform(0, 200)};
    return q;
}

// Features standardized in place (population statistics) so a known kernel acts on the same scale
// the model sees after its own scaler.
void zscore(RealMatrix &x)
{
    for (std::size_t c = 0; c < x.cols(); ++c)
    {
        double m = 0, v = 0;
        for (std::size_t r = 0; r < x.rows(); ++r)
            m += x(r, c);
        m /= x.rows();
        for (std::size_t r = 0; r < x.rows(); ++r)
            v += (x(r, c) - m) * (x(r, c) - m);
        v = std::sqrt(v / x.rows());
        for (std::size_t r = 0; r < x.rows(); ++r)
            x(r, c) = (x(r, c) - m) / v;
    }
}
} // namespace

TEST_CASE("se_kernel: identity, e^-1 point and bound")
{
    const GprHyper h{1.0, 0.5, 0.1};
    const std::vector<double> a{1.0, 2.0}, b{1.0, 3.0}; // ||a-b||^2 = 1 = 2 rho
    CHECK(se_kernel(a, a, h) == 1.0);
    CHECK(se_kernel(a, b, h) == doctest::Approx(0.367879).epsilon(1e-6));
    CHECK(se_kernel(a, b, h) == se_kernel(b, a, h));
    const GprHyper h2{2.5, 1.0, 0.1};
    const std::vector<double> far{30.0, -1.0};
    const double v = se_kernel(a, std::vector<double>{3.0, 2.0}, h2);
    CHECK(v > 0.0);
    CHECK(v < 2.5);
    CHECK(se_kernel(a, far, h2) >= 0.0);
    CHECK_THROWS_AS(se_kernel(a, std::vector<double>{1.0}, h), DomainError);
}

TEST_CASE("gram: shapes, duplicates and elementwise agreement")
{
    const GprHyper h{1.7, 0.8, 0.1};
    RealMatrix one(1, 3, 0.5);
    const auto g1 = gram(one, h);
    REQUIRE(g1.rows() == 1);
    CHECK(g1(0, 0) == 1.7);

    RealMatrix dup(2, 2, 4.0);
    const auto gd = gram(dup, h);
    for (double v : gd.data())
        CHECK(v == 1.7);
    const auto f = cholesky_psd(gd);
    CHECK(f.jitter > 0.0);

    RngStream rng(5, 5);
    RealMatrix x(5, 4);
    for (auto &v : x.data())
        v = rng.normal();
    const auto g = gram(x, h);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j)
        {
            const std::vector<double> xi(x.row(i).begin(), x.row(i).end()), xj(x.row(j).begin(), x.row(j).end());
            CHECK(g(i, j) == doctest::Approx(oracle::se(xi, xj, 1.7, 0.8)).epsilon(1e-14));
            CHECK(g(i, j) == g(j, i));
        }
}

TEST_CASE("gram: minimum eigenvalue is non-negative up to rounding")
{
    RngStream rng(12, 0);
    for (std::size_t k : {10u, 60u, 225u})
    {
        RealMatrix x(k, 3);
        for (auto &v : x.data())
            v = rng.normal();
        const GprHyper h{2.0, std::exp(rng.normal()), 0.1};
        const auto g = gram(x, h);
        ComplexMatrix c(k, k);
        for (std::size_t i = 0; i < g.data().size(); ++i)
            c.data()[i] = g.data()[i];
        const auto e = hermitian_eig(c);
        CHECK(e.values.front() >= -1e-8 * h.signal_var);
    }
}

TEST_CASE("log_marginal_likelihood: scalar closed form and dense oracle")
{
    RealMatrix x1(1, 2, 0.3);
    for (const GprHyper h : {GprHyper{1.0, 1.0, 0.1}, GprHyper{4.0, 0.2, 2.0}})
    {
        const std::vector<double> y{0.0};
        CHECK(log_marginal_likelihood(x1, y, h).value ==
              doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi * (h.signal_var + h.noise_var))));
    }

    RngStream rng(77, 1);
    for (int t = 0; t < 20; ++t)
    {
        const auto in = gpcheck::random_instance(rng, 8, 3);
        const double ref = oracle::gp_log_likelihood(in.x, in.y, in.hyper.signal_var, in.hyper.length_scale,
                                                     in.hyper.noise_var);
        CHECK(log_marginal_likelihood(gpcheck::to_matrix(in.x), in.y, in.hyper).value ==
              doctest::Approx(ref).epsilon(1e-10));
    }

    // Zero labels: only the log-determinant term remains.
    const auto in = gpcheck::random_instance(rng, 6, 2);
    const std::vector<double> zero(6, 0.0);
    const auto r = log_marginal_likelihood(gpcheck::to_matrix(in.x), zero, in.hyper);
    RealMatrix a = gram(gpcheck::to_matrix(in.x), in.hyper);
    for (std::size_t i = 0; i < 6; ++i)
        a(i, i) += in.hyper.noise_var;
    CHECK(r.value == doctest::Approx(-0.5 * oracle::log_det_spd(a) - 3.0 * std::log(2.0 * std::numbers::pi)));
}

TEST_CASE("log_marginal_likelihood: analytic gradient matches central differences")
{
    RngStream rng(2718, 0);
    for (int t = 0; t < 20; ++t)
        CHECK(gpcheck::gradient_relative_error(rng, 8, 3) < 1e-4);
}

TEST_CASE("predict: agrees with conditioning of the explicit joint Gaussian")
{
    RngStream rng(31415, 0);
    for (int t = 0; t < 20; ++t)
        CHECK(gpcheck::posterior_discrepancy(rng, 6, 3) < 1e-8);
}

TEST_CASE("predict: K=1 closed form, interpolation and prior reversion")
{
    RealMatrix x1(1, 1, 2.0);
    const GprHyper h{3.0, 0.5, 0.2};
    const std::vector<Position2D> one{{7.0, -1.0}};
    const auto m1 = fit_with_hyper(features(x1), one, {h, h}, false);
    const std::vector<double> xs{2.4};
    const double c = 3.0 * std::exp(-0.16 / 1.0);
    const auto p1 = predict(m1, xs);
    // A single label is its own mean, so the centered label is 0 and the mean is the offset.
    CHECK(p1.mean.x == doctest::Approx(7.0));
    CHECK(p1.variance_x == doctest::Approx(3.0 - c * c / 3.2));

    RngStream rng(64, 0);
    const auto fm = random_features(rng, 20, 3);
    const auto labels = random_labels(rng, 20);
    const GprHyper tight{900.0, 1.0, 1e-12};
    const auto m = fit_with_hyper(fm, labels, {tight, tight}, true);
    for (std::size_t i = 0; i < 20; ++i)
    {
        const auto p = predict(m, fm.values.row(i));
        CHECK(std::abs(p.mean.x - labels[i].x) < 1e-6);
        CHECK(std::abs(p.mean.y - labels[i].y) < 1e-6);
        CHECK(p.variance_x < 1e-6);
        CHECK(p.variance_y < 1e-6);
    }

    const std::vector<double> far{1e4, -1e4, 1e4};
    const auto pf = predict(m, far);
    CHECK(pf.mean.x == doctest::Approx(m.coords[0].label_offset));
    CHECK(pf.mean.y == doctest::Approx(m.coords[1].label_offset));
    CHECK(pf.variance_x == doctest::Approx(900.0));
    CHECK(pf.variance_y == doctest::Approx(900.0));
}

TEST_CASE("predict: variance bound and near-noiseless reproduction of labels")
{
    RngStream rng(99, 0);
    for (std::size_t k : {10u, 50u, 100u})
    {
        const auto fm = random_features(rng, k, 4);
        const auto labels = random_labels(rng, k);
        const GprHyper h{400.0, 2.0, 1e-10};
        const auto m = fit_with_hyper(fm, labels, {h, h}, true);
        for (std::size_t i = 0; i < k; ++i)
        {
            const auto p = predict(m, fm.values.row(i));
            CHECK(std::abs(p.mean.x - labels[i].x) < 1e-4);
            CHECK(std::abs(p.mean.y - labels[i].y) < 1e-4);
        }
        for (int t = 0; t < 50; ++t)
        {
            std::vector<double> xs(4);
            for (auto &v : xs)
                v = 2.0 * rng.normal();
            const auto p = predict(m, xs);
            CHECK(p.variance_x >= 0.0);
            CHECK(p.variance_x <= 400.0 + 1e-9);
            CHECK(p.variance_y <= 400.0 + 1e-9);
        }
    }
}

TEST_CASE("predict: permutation invariance and standardization equivariance")
{
    RngStream rng(4242, 0);
    const auto fm = random_features(rng, 30, 3);
    const auto labels = random_labels(rng, 30);
    const GprHyper hx{500.0, 1.5, 4.0}, hy{300.0, 0.7, 9.0};
    const auto base = fit_with_hyper(fm, labels, {hx, hy}, true);

    std::vector<std::size_t> perm(30);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = 29; i > 0; --i)
        std::swap(perm[i], perm[static_cast<std::size_t>(rng.uniform() * (i + 1))]);
    FeatureMatrix pf = fm;
    std::vector<Position2D> pl(30);
    for (std::size_t i = 0; i < 30; ++i)
    {
        std::copy(fm.values.row(perm[i]).begin(), fm.values.row(perm[i]).end(), pf.values.row(i).begin());
        pl[i] = labels[perm[i]];
    }
    const auto permuted = fit_with_hyper(pf, pl, {hx, hy}, true);

    FeatureMatrix scaled = fm;
    for (std::size_t r = 0; r < 30; ++r)
        scaled.values(r, 1) *= 37.5;
    const auto rescaled = fit_with_hyper(scaled, labels, {hx, hy}, true);

    for (int t = 0; t < 25; ++t)
    {
        std::vector<double> xs{rng.normal(), rng.normal(), rng.normal()};
        const auto a = predict(base, xs);
        const auto b = predict(permuted, xs);
        CHECK(std::abs(a.mean.x - b.mean.x) < 1e-9);
        CHECK(std::abs(a.mean.y - b.mean.y) < 1e-9);
        CHECK(std::abs(a.variance_x - b.variance_x) < 1e-9);
        auto xs2 = xs;
        xs2[1] *= 37.5;
        const auto c = predict(rescaled, xs2);
        CHECK(std::abs(a.mean.x - c.mean.x) < 1e-9);
        CHECK(std::abs(a.mean.y - c.mean.y) < 1e-9);
        CHECK(std::abs(a.variance_y - c.variance_y) < 1e-9);
    }

    const std::vector<double> bad{1.0, std::numeric_limits<double>::quiet_NaN(), 0.0};
    CHECK_THROWS_AS(predict(base, bad), DomainError);
    CHECK_THROWS_AS(predict(base, std::vector<double>{1.0}), DomainError);
}

TEST_CASE("train: recovers known hyperparameters of a 1-D GP")
{
    // Truth in standardized feature units; log values are about +-3.2 each.
    const GprHyper truth{25.0, 0.04, 0.04};
    const auto t_log = truth.to_log();
    RngStream rng(8086, 0);
    int good = 0, total = 0;
    for (int trial = 0; trial < 20; ++trial)
    {
        RealMatrix x(64, 1);
        for (auto &v : x.data())
            v = rng.uniform();
        zscore(x);
        auto a = gram(x, truth);
        for (std::size_t i = 0; i < 64; ++i)
            a(i, i) += truth.noise_var;
        const auto f = cholesky_psd(a);
        std::vector<Position2D> labels(64);
        for (int c = 0; c < 2; ++c)
        {
            std::vector<double> z(64);
            for (auto &v : z)
                v = rng.normal();
            for (std::size_t i = 0; i < 64; ++i)
            {
                double s = 0.0;
                for (std::size_t k = 0; k <= i; ++k)
                    s += f.lower(i, k) * z[k];
                (c == 0 ? labels[i].x : labels[i].y) = 100.0 + s;
            }
        }
        RngStream train_rng(trial, 1);
        const auto m = train(features(x), labels, GprTrainConfig{}, train_rng);
        for (const auto &coord : m.coords)
        {
            const auto est = coord.hyper.to_log();
            bool ok = true;
            for (int i = 0; i < 3; ++i)
                ok = ok && std::abs(est[i] - t_log[i]) <= 0.3 * std::abs(t_log[i]);
            good += ok;
            ++total;
        }
    }
    MESSAGE("hyperparameter recovery: " << good << " / " << total);
    CHECK(good >= 0.8 * total);
}

TEST_CASE("train: ascent never ends below the initial point")
{
    RngStream rng(5150, 0);
    const auto fm = random_features(rng, 40, 3);
    const auto labels = random_labels(rng, 40);
    GprTrainConfig cfg;
    cfg.restarts = 1;
    RngStream tr(1, 1);
    const auto m = train(fm, labels, cfg, tr);

    // Default initialization reproduced from its definition.
    const auto scaled = FeatureScaler::fit(fm.values, true).apply(fm.values);
    const auto d2 = squared_distances(scaled);
    std::vector<double> pairs;
    for (std::size_t i = 0; i < 40; ++i)
        for (std::size_t j = 0; j < i; ++j)
            pairs.push_back(d2(i, j));
    std::nth_element(pairs.begin(), pairs.begin() + pairs.size() / 2, pairs.end());
    const double rho0 = pairs[pairs.size() / 2];
    for (int c = 0; c < 2; ++c)
    {
        std::vector<double> y(40);
        double mean = 0.0, var = 0.0;
        for (std::size_t i = 0; i < 40; ++i)
            mean += c ? labels[i].y : labels[i].x;
        mean /= 40;
        for (std::size_t i = 0; i < 40; ++i)
        {
            y[i] = (c ? labels[i].y : labels[i].x) - mean;
            var += y[i] * y[i] / 40;
        }
        const double init = log_marginal_likelihood_from_distances(d2, y, {var, rho0, 0.1 * var}, false).value;
        CHECK(m.coords[c].log_likelihood >= init);
        const auto g = log_marginal_likelihood_from_distances(d2, y, m.coords[c].hyper).gradient;
        // stationary point (or box edge): gradient small relative to the objective's scale
        CHECK(std::abs(g[0]) + std::abs(g[1]) + std::abs(g[2]) < 1e-2 * std::max(1.0, std::abs(init)));
    }
}

TEST_CASE("train: duplicate rows with contradictory labels, determinism and errors")
{
    RngStream rng(6, 6);
    auto fm = random_features(rng, 20, 2);
    auto labels = random_labels(rng, 20);
    // rows 10..19 duplicate rows 0..9 with different labels
    for (std::size_t i = 10; i < 20; ++i)
        std::copy(fm.values.row(i - 10).begin(), fm.values.row(i - 10).end(), fm.values.row(i).begin());
    RngStream a(42, 0), b(42, 0);
    const auto m1 = train(fm, labels, {}, a);
    const auto m2 = train(fm, labels, {}, b);
    for (int c = 0; c < 2; ++c)
    {
        CHECK(m1.coords[c].hyper.noise_var > 1.0);
        CHECK(m1.coords[c].hyper.signal_var == m2.coords[c].hyper.signal_var);
        CHECK(m1.coords[c].hyper.length_scale == m2.coords[c].hyper.length_scale);
        CHECK(m1.coords[c].alpha == m2.coords[c].alpha);
    }

    RngStream c(1, 0);
    CHECK_THROWS_AS(train(random_features(c, 3, 2), random_labels(c, 3), {}, c), ConfigError);
    auto constant = random_features(c, 10, 2);
    for (std::size_t r = 0; r < 10; ++r)
        constant.values(r, 1) = 5.0;
    CHECK_THROWS_AS(train(constant, random_labels(c, 10), {}, c), ConfigError);
    auto mismatched = random_features(c, 10, 2);
    mismatched.column_kinds.pop_back();
    CHECK_THROWS_AS(train(mismatched, random_labels(c, 10), {}, c), ConfigError);
}

TEST_CASE("raw-unit mode keeps features unscaled")
{
    RngStream rng(3, 0);
    auto fm = random_features(rng, 12, 2);
    const GprHyper h{10.0, 1.0, 0.5};
    const auto m = fit_with_hyper(fm, random_labels(rng, 12), {h, h}, false);
    CHECK(m.train_features == fm.values);
    CHECK(m.scaler.mean == std::vector<double>{0.0, 0.0});
}

TEST_CASE("model JSON round trip reproduces predictions")
{
    RngStream rng(10, 10);
    const auto fm = random_features(rng, 25, 3);
    const auto labels = random_labels(rng, 25);
    RngStream tr(10, 11);
    GprTrainConfig cfg;
    cfg.restarts = 2;
    const auto m = train(fm, labels, cfg, tr);
    const auto back = model_from_json(nlohmann::json::parse(model_to_json(m).dump()));
    for (int t = 0; t < 10; ++t)
    {
        std::vector<double> xs{rng.normal(), rng.normal(), rng.normal()};
        const auto a = predict(m, xs), b = predict(back, xs);
        CHECK(a.mean.x == b.mean.x);
        CHECK(a.mean.y == b.mean.y);
        CHECK(a.variance_x == b.variance_x);
    }
    auto broken = model_to_json(m);
    broken["coords"][0]["alpha"].erase(0);
    CHECK_THROWS_AS(model_from_json(broken), ConfigError);
}
