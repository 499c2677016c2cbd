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

#include "cfpos/gpr.hpp"
#include "cfpos/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>

namespace cfpos
{

// ---------- features ----------

void validate(const FeatureMatrix &x)
{
    if (x.column_kinds.size() != x.cols())
        throw ConfigError("feature matrix: one column kind per column is required");
    for (double v : x.values.data())
        if (!std::isfinite(v))
            throw ConfigError("feature matrix: non-finite entry");
}

FeatureScaler FeatureScaler::fit(const RealMatrix &x, bool standardize)
{
    const std::size_t k = x.rows(), d = x.cols();
    FeatureScaler s;
    s.mean.assign(d, 0.0);
    s.stddev.assign(d, 1.0);
    if (k == 0)
        throw ConfigError("feature scaler: no training rows");
    for (std::size_t c = 0; c < d; ++c)
    {
        double mean = 0.0;
        for (std::size_t r = 0; r < k; ++r)
            mean += x(r, c);
        mean /= static_cast<double>(k);
        double var = 0.0;
        for (std::size_t r = 0; r < k; ++r)
            var += (x(r, c) - mean) * (x(r, c) - mean);
        var /= static_cast<double>(k);
        if (!(var > 0.0) && k > 1)
        {
            std::ostringstream msg;
            msg << "feature scaler: column " << c << " is constant";
            throw ConfigError(msg.str());
        }
        if (standardize && var > 0.0)
        {
            s.mean[c] = mean;
            s.stddev[c] = std::sqrt(var);
        }
    }
    return s;
}

std::vector<double> FeatureScaler::apply(std::span<const double> row) const
{
    if (row.size() != mean.size())
        throw DomainError("feature scaler: dimension mismatch");
    std::vector<double> out(row.size());
    for (std::size_t c = 0; c < row.size(); ++c)
        out[c] = (row[c] - mean[c]) / stddev[c];
    return out;
}

RealMatrix FeatureScaler::apply(const RealMatrix &x) const
{
    RealMatrix out(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r)
    {
        const auto s = apply(x.row(r));
        std::copy(s.begin(), s.end(), out.row(r).begin());
    }
    return out;
}

// ---------- kernel ----------

std::array<double, 3> GprHyper::to_log() const
{
    return {std::log(signal_var), std::log(length_scale), std::log(noise_var)};
}

GprHyper GprHyper::from_log(const std::array<double, 3> &p)
{
    return {std::exp(p[0]), std::exp(p[1]), std::exp(p[2])};
}

namespace
{
double squared_distance(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
    {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

std::string describe(const GprHyper &h)
{
    std::ostringstream msg;
    msg.precision(6);
    msg << "b2=" << h.signal_var << " rho=" << h.length_scale << " noise=" << h.noise_var;
    return msg.str();
}
} // namespace

double se_kernel(std::span<const double> r, std::span<const double> r2, const GprHyper &hyper)
{
    if (r.size() != r2.size())
        throw DomainError("se_kernel: feature dimensions differ");
    return hyper.signal_var * std::exp(-squared_distance(r, r2) / (2.0 * hyper.length_scale));
}

RealMatrix squared_distances(const RealMatrix &x)
{
    const std::size_t k = x.rows();
    RealMatrix d(k, k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < i; ++j)
        {
            const double v = squared_distance(x.row(i), x.row(j));
            d(i, j) = v;
            d(j, i) = v;
        }
    return d;
}

RealMatrix gram(const RealMatrix &x, const GprHyper &hyper)
{
    const auto d = squared_distances(x);
    RealMatrix g(d.rows(), d.cols());
    for (std::size_t i = 0; i < d.data().size(); ++i)
        g.data()[i] = hyper.signal_var * std::exp(-d.data()[i] / (2.0 * hyper.length_scale));
    return g;
}

// ---------- marginal likelihood ----------

namespace
{
// Factorized state at one hyperparameter point; the gradient is computed on demand.
struct LmlState
{
    GprHyper hyper;
    RealMatrix kf; // signal part of the Gram matrix
    CholeskyFactor<double> chol;
    std::vector<double> alpha;
    double value = 0.0;
};

LmlState factorize(const RealMatrix &sq_dist, std::span<const double> y, const GprHyper &hyper)
{
    const std::size_t k = sq_dist.rows();
    if (y.size() != k)
        throw DomainError("log marginal likelihood: label count differs from row count");

    LmlState s;
    s.hyper = hyper;
    s.kf = RealMatrix(k, k);
    RealMatrix a(k, k);
    const double inv = -1.0 / (2.0 * hyper.length_scale);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j <= i; ++j)
        {
            const double v = hyper.signal_var * std::exp(sq_dist(i, j) * inv);
            s.kf(i, j) = s.kf(j, i) = v;
            a(i, j) = a(j, i) = v;
        }
    for (std::size_t i = 0; i < k; ++i)
        a(i, i) += hyper.noise_var;

    try
    {
        s.chol = cholesky_psd(a);
    }
    catch (const NotPsdError &e)
    {
        throw NotPsdError(std::string(e.what()) + " at " + describe(hyper), e.attempted_jitter());
    }

    s.alpha.assign(y.begin(), y.end());
    solve_lower(s.chol.lower, std::span<double>(s.alpha));
    solve_lower_adjoint(s.chol.lower, std::span<double>(s.alpha));

    double quad = 0.0, logdet = 0.0;
    for (std::size_t i = 0; i < k; ++i)
    {
        quad += y[i] * s.alpha[i];
        logdet += std::log(s.chol.lower(i, i));
    }
    s.value = -0.5 * quad - logdet - 0.5 * static_cast<double>(k) * std::log(2.0 * std::numbers::pi);
    return s;
}

// Lower triangle of A^{-1} = L^{-T} L^{-1}.
RealMatrix inverse_from_cholesky(const RealMatrix &l)
{
    const std::size_t k = l.rows();
    RealMatrix m(k, k); // L^{-1}, row i solves L^T m = e_i
    for (std::size_t i = 0; i < k; ++i)
    {
        auto mi = m.row(i);
        mi[i] = 1.0;
        for (std::size_t kk = i + 1; kk-- > 0;)
        {
            mi[kk] /= l(kk, kk);
            const double v = mi[kk];
            auto lk = l.row(kk);
            for (std::size_t j = 0; j < kk; ++j)
                mi[j] -= lk[j] * v;
        }
    }
    RealMatrix inv(k, k);
    for (std::size_t r = 0; r < k; ++r)
    {
        auto mr = m.row(r);
        for (std::size_t a = 0; a <= r; ++a)
        {
            const double ma = mr[a];
            auto ia = inv.row(a);
            for (std::size_t b = 0; b <= a; ++b)
                ia[b] += ma * mr[b];
        }
    }
    return inv;
}

// Gradient of the log marginal likelihood in log-hyperparameter space, 0.5 tr(W dA/dp)
// with W = alpha alpha^T - A^{-1}.
std::array<double, 3> gradient(const LmlState &s, const RealMatrix &sq_dist)
{
    const std::size_t k = s.alpha.size();
    const auto inv = inverse_from_cholesky(s.chol.lower);
    const double two_rho = 2.0 * s.hyper.length_scale;
    double g_signal = 0.0, g_length = 0.0, trace_w = 0.0;
    for (std::size_t i = 0; i < k; ++i)
    {
        for (std::size_t j = 0; j < i; ++j)
        {
            const double w = 2.0 * (s.alpha[i] * s.alpha[j] - inv(i, j)); // both triangles
            const double kw = w * s.kf(i, j);
            g_signal += kw;
            g_length += kw * sq_dist(i, j) / two_rho;
        }
        const double wii = s.alpha[i] * s.alpha[i] - inv(i, i);
        g_signal += wii * s.kf(i, i);
        trace_w += wii;
    }
    return {0.5 * g_signal, 0.5 * g_length, 0.5 * s.hyper.noise_var * trace_w};
}
} // namespace

LmlResult log_marginal_likelihood_from_distances(const RealMatrix &sq_dist, std::span<const double> y,
                                                 const GprHyper &hyper, bool with_gradient)
{
    const auto s = factorize(sq_dist, y, hyper);
    LmlResult r;
    r.value = s.value;
    if (with_gradient)
        r.gradient = gradient(s, sq_dist);
    return r;
}

LmlResult log_marginal_likelihood(const RealMatrix &x, std::span<const double> y, const GprHyper &hyper)
{
    return log_marginal_likelihood_from_distances(squared_distances(x), y, hyper, true);
}

// ---------- training ----------

namespace
{
using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;

double dot(const Vec3 &a, const Vec3 &b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Mat3 eye3() { return {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}; }

struct Candidate
{
    Vec3 log_hyper{};
    double value = -std::numeric_limits<double>::infinity();
};

std::optional<LmlState> try_factorize(const RealMatrix &sq_dist, std::span<const double> y, const Vec3 &p)
{
    try
    {
        auto s = factorize(sq_dist, y, GprHyper::from_log(p));
        if (!std::isfinite(s.value))
            return std::nullopt;
        return s;
    }
    catch (const NotPsdError &)
    {
        return std::nullopt;
    }
}

// Quasi-Newton (BFGS) ascent with Armijo backtracking; falls back to the plain gradient when the
// curvature estimate stops producing an ascent direction.
Candidate ascend(const RealMatrix &sq_dist, std::span<const double> y, Vec3 start, const Vec3 &lo, const Vec3 &hi,
                 const GprTrainConfig &cfg)
{
    auto clamp = [&](Vec3 p) {
        for (int i = 0; i < 3; ++i)
            p[i] = std::clamp(p[i], lo[i], hi[i]);
        return p;
    };
    constexpr double kMaxStep = 3.0;
    constexpr double kArmijo = 1e-4;

    Vec3 x = clamp(start);
    auto state = try_factorize(sq_dist, y, x);
    if (!state)
        return {};
    Vec3 g = gradient(*state, sq_dist);
    Mat3 h = eye3(); // inverse Hessian approximation of the negated objective
    bool h_is_identity = true;

    for (std::size_t it = 0; it < cfg.max_iterations; ++it)
    {
        Vec3 dir{};
        for (int i = 0; i < 3; ++i)
            dir[i] = dot(h[i], g);
        if (dot(dir, g) <= 0.0)
        {
            h = eye3();
            h_is_identity = true;
            dir = g;
        }
        const double len = std::sqrt(dot(dir, dir));
        if (len == 0.0)
            break;
        if (len > kMaxStep)
            for (auto &v : dir)
                v *= kMaxStep / len;

        double t = 1.0;
        std::optional<LmlState> next;
        Vec3 xn{};
        for (int bt = 0; bt < 40; ++bt, t *= 0.5)
        {
            for (int i = 0; i < 3; ++i)
                xn[i] = x[i] + t * dir[i];
            xn = clamp(xn);
            Vec3 step{xn[0] - x[0], xn[1] - x[1], xn[2] - x[2]};
            if (dot(step, step) == 0.0)
                break;
            next = try_factorize(sq_dist, y, xn);
            if (next && next->value >= state->value + kArmijo * dot(g, step))
                break;
            next.reset();
        }
        if (!next)
        {
            if (h_is_identity)
                break;
            h = eye3();
            h_is_identity = true;
            continue;
        }

        const Vec3 gn = gradient(*next, sq_dist);
        const Vec3 s{xn[0] - x[0], xn[1] - x[1], xn[2] - x[2]};
        const Vec3 yv{g[0] - gn[0], g[1] - gn[1], g[2] - gn[2]}; // gradient change of the negated objective
        const double sy = dot(s, yv);
        if (sy > 1e-12)
        {
            // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
            const double rho = 1.0 / sy;
            Vec3 hy{};
            for (int i = 0; i < 3; ++i)
                hy[i] = dot(h[i], yv);
            const double yhy = dot(yv, hy);
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                    h[i][j] += -rho * (s[i] * hy[j] + hy[i] * s[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
            h_is_identity = false;
        }

        const double change = std::abs(next->value - state->value) / std::max(1.0, std::abs(state->value));
        x = xn;
        g = gn;
        state = std::move(next);
        if (change < cfg.relative_tolerance)
            break;
    }
    return {x, state->value};
}

double median(std::vector<double> v)
{
    if (v.empty())
        return 0.0;
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

CoordinateModel finish(const RealMatrix &sq_dist, std::span<const double> centered, double offset,
                       const GprHyper &hyper)
{
    auto s = factorize(sq_dist, centered, hyper);
    CoordinateModel c;
    c.hyper = hyper;
    c.label_offset = offset;
    c.chol = std::move(s.chol.lower);
    c.jitter = s.chol.jitter;
    c.alpha = std::move(s.alpha);
    c.log_likelihood = s.value;
    return c;
}

struct Prepared
{
    FeatureScaler scaler;
    RealMatrix scaled;
    RealMatrix sq_dist;
    std::array<std::vector<double>, 2> centered;
    std::array<double, 2> offset{};
};

Prepared prepare(const FeatureMatrix &x_raw, std::span<const Position2D> labels, bool standardize)
{
    validate(x_raw);
    if (labels.size() != x_raw.rows())
        throw ConfigError("GPR: label count differs from feature row count");
    if (x_raw.rows() == 0 || x_raw.cols() == 0)
        throw ConfigError("GPR: empty training set");

    Prepared p;
    p.scaler = FeatureScaler::fit(x_raw.values, standardize);
    p.scaled = p.scaler.apply(x_raw.values);
    p.sq_dist = squared_distances(p.scaled);
    const std::size_t k = labels.size();
    for (int c = 0; c < 2; ++c)
    {
        double mean = 0.0;
        for (const auto &q : labels)
            mean += c == 0 ? q.x : q.y;
        mean /= static_cast<double>(k);
        p.offset[c] = mean;
        p.centered[c].resize(k);
        for (std::size_t i = 0; i < k; ++i)
            p.centered[c][i] = (c == 0 ? labels[i].x : labels[i].y) - mean;
    }
    return p;
}
} // namespace

GprModel train(const FeatureMatrix &x_raw, std::span<const Position2D> labels, const GprTrainConfig &cfg,
               RngStream &rng)
{
    if (x_raw.rows() < 4)
        throw ConfigError("GPR training needs at least 4 reference points");
    if (cfg.restarts == 0 || cfg.max_iterations == 0)
        throw ConfigError("GPR training needs at least one restart and one iteration");
    const auto p = prepare(x_raw, labels, cfg.standardize_features);
    const std::size_t k = labels.size();

    std::vector<double> pair_d2;
    pair_d2.reserve(k * (k - 1) / 2);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < i; ++j)
            pair_d2.push_back(p.sq_dist(i, j));
    double rho0 = median(pair_d2);
    if (!(rho0 > 0.0))
        rho0 = 1.0;

    GprModel model;
    model.scaler = p.scaler;
    model.train_features = p.scaled;
    for (int c = 0; c < 2; ++c)
    {
        const auto &y = p.centered[c];
        double var = 0.0;
        for (double v : y)
            var += v * v;
        var /= static_cast<double>(k);
        if (!(var > 0.0))
            var = 1.0;

        const Vec3 init = GprHyper{var, rho0, 0.1 * var}.to_log();
        Vec3 lo{}, hi{};
        for (int i = 0; i < 3; ++i)
        {
            lo[i] = init[i] - cfg.log_box;
            hi[i] = init[i] + cfg.log_box;
        }

        Candidate best;
        for (std::size_t r = 0; r < cfg.restarts; ++r)
        {
            Vec3 start = init;
            if (r > 0)
                for (auto &v : start)
                    v += rng.normal();
            const auto cand = ascend(p.sq_dist, y, start, lo, hi, cfg);
            if (std::isfinite(cand.value) && cand.value > best.value)
                best = cand;
        }
        if (!std::isfinite(best.value))
        {
            std::ostringstream msg;
            msg << "GPR training: every restart failed for coordinate " << c << " (K=" << k
                << ", initial " << describe(GprHyper::from_log(init)) << ")";
            throw TrainingError(msg.str());
        }
        model.coords[c] = finish(p.sq_dist, y, p.offset[c], GprHyper::from_log(best.log_hyper));
    }
    return model;
}

GprModel fit_with_hyper(const FeatureMatrix &x_raw, std::span<const Position2D> labels,
                        const std::array<GprHyper, 2> &hyper, bool standardize_features)
{
    const auto p = prepare(x_raw, labels, standardize_features);
    GprModel model;
    model.scaler = p.scaler;
    model.train_features = p.scaled;
    for (int c = 0; c < 2; ++c)
        model.coords[c] = finish(p.sq_dist, p.centered[c], p.offset[c], hyper[c]);
    return model;
}

Prediction predict(const GprModel &model, std::span<const double> x_raw)
{
    if (x_raw.size() != model.dim())
        throw DomainError("GPR predict: feature dimension differs from the training features");
    for (double v : x_raw)
        if (!std::isfinite(v))
            throw DomainError("GPR predict: non-finite feature");
    const auto x = model.scaler.apply(x_raw);
    const std::size_t k = model.train_features.rows();

    std::vector<double> d2(k);
    for (std::size_t i = 0; i < k; ++i)
        d2[i] = squared_distance(x, model.train_features.row(i));

    std::array<double, 2> mean{}, var{};
    std::vector<double> ks(k);
    for (int c = 0; c < 2; ++c)
    {
        const auto &m = model.coords[c];
        double mu = 0.0;
        for (std::size_t i = 0; i < k; ++i)
        {
            ks[i] = m.hyper.signal_var * std::exp(-d2[i] / (2.0 * m.hyper.length_scale));
            mu += ks[i] * m.alpha[i];
        }
        solve_lower(m.chol, std::span<double>(ks));
        double explained = 0.0;
        for (double v : ks)
            explained += v * v;
        mean[c] = mu + m.label_offset;
        var[c] = std::max(0.0, m.hyper.signal_var - explained);
    }
    return {{mean[0], mean[1]}, var[0], var[1]};
}

// ---------- serialization ----------

namespace
{
nlohmann::json matrix_to_json(const RealMatrix &m)
{
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

RealMatrix matrix_from_json(const nlohmann::json &j)
{
    RealMatrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    const auto data = j.at("data").get<std::vector<double>>();
    if (data.size() != m.data().size())
        throw ConfigError("GPR model document: matrix size mismatch");
    m.data() = data;
    return m;
}
} // namespace

nlohmann::json model_to_json(const GprModel &model)
{
    nlohmann::json coords = nlohmann::json::array();
    for (const auto &c : model.coords)
        coords.push_back({{"signal_var", c.hyper.signal_var},
                          {"length_scale", c.hyper.length_scale},
                          {"noise_var", c.hyper.noise_var},
                          {"label_offset", c.label_offset},
                          {"log_likelihood", c.log_likelihood},
                          {"jitter", c.jitter},
                          {"alpha", c.alpha},
                          {"chol", matrix_to_json(c.chol)}});
    return {{"scaler", {{"mean", model.scaler.mean}, {"stddev", model.scaler.stddev}}},
            {"train_features", matrix_to_json(model.train_features)},
            {"coords", std::move(coords)}};
}

GprModel model_from_json(const nlohmann::json &j)
{
    GprModel m;
    try
    {
        j.at("scaler").at("mean").get_to(m.scaler.mean);
        j.at("scaler").at("stddev").get_to(m.scaler.stddev);
        m.train_features = matrix_from_json(j.at("train_features"));
        const auto &coords = j.at("coords");
        if (coords.size() != 2)
            throw ConfigError("GPR model document: exactly two coordinates expected");
        for (int c = 0; c < 2; ++c)
        {
            const auto &jc = coords.at(c);
            auto &mc = m.coords[c];
            jc.at("signal_var").get_to(mc.hyper.signal_var);
            jc.at("length_scale").get_to(mc.hyper.length_scale);
            jc.at("noise_var").get_to(mc.hyper.noise_var);
            jc.at("label_offset").get_to(mc.label_offset);
            jc.at("log_likelihood").get_to(mc.log_likelihood);
            jc.at("jitter").get_to(mc.jitter);
            jc.at("alpha").get_to(mc.alpha);
            mc.chol = matrix_from_json(jc.at("chol"));
        }
    }
    catch (const nlohmann::json::exception &e)
    {
        throw ConfigError(std::string("GPR model document: ") + e.what());
    }
    const std::size_t k = m.train_features.rows();
    if (m.scaler.mean.size() != m.train_features.cols() || m.scaler.stddev.size() != m.train_features.cols())
        throw ConfigError("GPR model document: scaler dimension mismatch");
    for (const auto &c : m.coords)
        if (c.alpha.size() != k || c.chol.rows() != k || c.chol.cols() != k)
            throw ConfigError("GPR model document: factor dimension mismatch");
    return m;
}

} // namespace cfpos
