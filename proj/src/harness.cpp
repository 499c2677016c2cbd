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

#include "cfpos/harness.hpp"
#include "cfpos/baselines.hpp"
#include "cfpos/errors.hpp"
#include "cfpos/fingerprint.hpp"
#include "cfpos/gpr.hpp"
#include "cfpos/io.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <thread>

namespace cfpos
{

namespace
{
// Child stream ids below a setup stream.
enum StreamId : std::uint64_t
{
    kApStream = 1,
    kTestPointStream = 2,
    kShadowStream = 3,
    kOfflineStream = 4,
    kOnlineStream = 5,
    kTrainStream = 6,
};

constexpr int kDigits = 9;

FeatureMode feature_mode(Method m)
{
    switch (m)
    {
    case Method::rss_gpr:
    case Method::wknn_rss:
    case Method::lr_rss:
        return FeatureMode::rss_only;
    case Method::aoa_gpr:
        return FeatureMode::aoa_only;
    default:
        return FeatureMode::hybrid;
    }
}

bool is_gpr(Method m)
{
    return m == Method::hybrid_gpr || m == Method::rss_gpr || m == Method::aoa_gpr;
}

// Trains one method on the offline database and localizes every test vector.
std::vector<Position2D> localize(const ExperimentConfig &cfg, Method method, const FingerprintDb &db,
                                 const std::vector<TestVector> &online, RngStream &rng)
{
    const FeatureMode mode = feature_mode(method);
    const FeatureMatrix features = assemble_features(db, mode);
    std::vector<Position2D> out;
    out.reserve(online.size());

    if (is_gpr(method))
    {
        GprTrainConfig tc;
        tc.standardize_features = cfg.standardize_features;
        tc.restarts = cfg.gpr_restarts;
        const GprModel model = train(features, db.rp_positions, tc, rng);
        for (const auto &v : online)
            out.push_back(predict(model, assemble_features(v, mode)).mean);
        return out;
    }

    validate(features);
    const FeatureScaler scaler = FeatureScaler::fit(features.values, cfg.standardize_features);
    const RealMatrix scaled = scaler.apply(features.values);
    if (method == Method::wknn_rss || method == Method::wknn_hybrid)
    {
        const WknnConfig wc{cfg.wknn_k, WknnConfig{}.epsilon};
        for (const auto &v : online)
            out.push_back(wknn_predict(scaled, db.rp_positions, scaler.apply(assemble_features(v, mode)), wc));
        return out;
    }
    const LinearModel lr = lr_fit(scaled, db.rp_positions);
    for (const auto &v : online)
        out.push_back(lr_predict(lr, scaler.apply(assemble_features(v, mode))));
    return out;
}

std::string csv_row(std::initializer_list<std::string> fields)
{
    std::string s;
    for (const auto &f : fields)
    {
        if (!s.empty())
            s += ',';
        s += f;
    }
    return s + '\n';
}
} // namespace

double positioning_error(const Position2D &truth, const Position2D &estimate)
{
    return std::hypot(truth.x - estimate.x, truth.y - estimate.y);
}

SetupResult run_setup(const ExperimentConfig &cfg, std::size_t setup_index)
{
    validate(cfg);
    const RngStream setup = RngStream(cfg.seed, 0).derive(setup_index);
    const PathLossParams pathloss = cfg.pathloss();
    const RadioParams radio = cfg.radio();
    const MusicConfig music = cfg.music();

    Scenario scenario;
    scenario.area_side = cfg.area_side;
    scenario.ue_height = cfg.ue_height;
    {
        RngStream rng = setup.derive(kApStream);
        scenario.aps = place_aps(cfg.area_side, cfg.n_aps, cfg.ap_height, {cfg.n_antennas, cfg.element_spacing}, rng);
    }
    scenario.rps = make_rp_grid(cfg.area_side, cfg.n_rps);
    RngStream tp_rng = setup.derive(kTestPointStream);
    const auto tps = sample_test_points(cfg.area_side, cfg.test_points, tp_rng);

    // One joint field per AP over the RPs followed by the test points.
    std::vector<Position2D> points = scenario.rps;
    points.insert(points.end(), tps.begin(), tps.end());
    RngStream shadow_rng = setup.derive(kShadowStream);
    const ShadowField shadow = sample_shadow_field(points, cfg.n_aps, cfg.sigma_sf_db, cfg.d_corr, shadow_rng);

    RngStream offline_rng = setup.derive(kOfflineStream);
    const FingerprintDb db =
        build_offline_db(scenario, pathloss, radio, shadow, cfg.aoa_noise_std_deg, offline_rng);

    SetupResult result;
    const RngStream online_rng = setup.derive(kOnlineStream);
    std::vector<TestVector> online;
    online.reserve(tps.size());
    for (std::size_t t = 0; t < tps.size(); ++t)
    {
        RngStream rng = online_rng.derive(t);
        online.push_back(
            build_online_vector(scenario, tps[t], cfg.n_rps + t, pathloss, radio, shadow, music, rng));
        result.low_confidence_aoa += online.back().low_confidence_aoa;
    }

    const RngStream train_rng = setup.derive(kTrainStream);
    std::vector<std::vector<Position2D>> estimates(cfg.methods.size());
    std::vector<bool> ok(cfg.methods.size(), false);
    for (std::size_t m = 0; m < cfg.methods.size(); ++m)
    {
        RngStream rng = train_rng.derive(static_cast<std::uint64_t>(cfg.methods[m]));
        try
        {
            estimates[m] = localize(cfg, cfg.methods[m], db, online, rng);
            ok[m] = std::all_of(estimates[m].begin(), estimates[m].end(),
                                [](const Position2D &p) { return std::isfinite(p.x) && std::isfinite(p.y); });
            if (!ok[m])
                result.failures.push_back({setup_index, cfg.methods[m], "non-finite position estimate"});
        }
        catch (const std::exception &e)
        {
            result.failures.push_back({setup_index, cfg.methods[m], e.what()});
        }
    }

    for (std::size_t t = 0; t < tps.size(); ++t)
        for (std::size_t m = 0; m < cfg.methods.size(); ++m)
            if (ok[m])
                result.errors.push_back(
                    {setup_index, t, cfg.methods[m], positioning_error(tps[t], estimates[m][t])});
    return result;
}

std::vector<double> ExperimentResult::samples(Method m) const
{
    std::vector<double> out;
    for (const auto &e : errors)
        if (e.method == m)
            out.push_back(e.error_m);
    return out;
}

double quantile(std::vector<double> values, double q)
{
    if (values.empty())
        throw DomainError("quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<CdfPoint> empirical_cdf(const std::vector<double> &samples, std::size_t points)
{
    if (samples.empty() || points < 2)
        return {};
    std::vector<double> sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    const double top = sorted.back();
    std::vector<CdfPoint> out(points);
    for (std::size_t i = 0; i < points; ++i)
    {
        const double e = i + 1 == points ? top : top * static_cast<double>(i) / static_cast<double>(points - 1);
        const auto count = std::upper_bound(sorted.begin(), sorted.end(), e) - sorted.begin();
        out[i] = {e, static_cast<double>(count) / static_cast<double>(sorted.size())};
    }
    return out;
}

ExperimentResult summarize(const ExperimentConfig &cfg, std::vector<ErrorRecord> errors,
                           std::vector<MethodFailure> failures)
{
    ExperimentResult r;
    r.config = cfg;
    r.errors = std::move(errors);
    r.failures = std::move(failures);
    for (Method m : cfg.methods)
    {
        const auto s = r.samples(m);
        if (s.empty())
            continue;
        MethodSummary ms;
        ms.method = m;
        ms.count = s.size();
        double sum = 0.0;
        for (double e : s)
            sum += e;
        ms.mean_m = sum / static_cast<double>(s.size());
        ms.median_m = quantile(s, 0.5);
        ms.p90_m = quantile(s, 0.9);
        ms.cdf = empirical_cdf(s);
        r.summaries.push_back(std::move(ms));
    }
    return r;
}

ExperimentResult run_experiment(const ExperimentConfig &cfg)
{
    validate(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    std::size_t workers = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, cfg.n_setups);

    std::vector<SetupResult> per_setup(cfg.n_setups);
    std::vector<std::exception_ptr> crashes(cfg.n_setups);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t s = next++; s < cfg.n_setups; s = next++)
        {
            try
            {
                per_setup[s] = run_setup(cfg, s);
            }
            catch (...)
            {
                crashes[s] = std::current_exception();
            }
        }
    };
    if (workers <= 1)
        work();
    else
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back(work);
    }
    for (const auto &c : crashes)
        if (c)
            std::rethrow_exception(c);

    std::vector<ErrorRecord> errors;
    std::vector<MethodFailure> failures;
    std::size_t low_confidence = 0;
    for (auto &s : per_setup)
    {
        errors.insert(errors.end(), s.errors.begin(), s.errors.end());
        failures.insert(failures.end(), s.failures.begin(), s.failures.end());
        low_confidence += s.low_confidence_aoa;
    }
    ExperimentResult r = summarize(cfg, std::move(errors), std::move(failures));
    r.low_confidence_aoa = low_confidence;
    r.threads_used = workers;
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

void emit_outputs(const ExperimentResult &result, const std::string &dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw IoError("cannot create output directory " + dir + ": " + ec.message());
    const std::filesystem::path root(dir);

    std::string errors = "setup,test_point,method,error_m\n";
    for (const auto &e : result.errors)
        errors += csv_row({std::to_string(e.setup), std::to_string(e.test_point), method_name(e.method),
                           format_number(e.error_m, kDigits)});

    std::string summary = "method,mean_m,median_m,p90_m\n";
    std::string cdf = "method,error_m,cdf\n";
    for (const auto &s : result.summaries)
    {
        summary += csv_row({method_name(s.method), format_number(s.mean_m, kDigits),
                            format_number(s.median_m, kDigits), format_number(s.p90_m, kDigits)});
        for (const auto &p : s.cdf)
            cdf += csv_row({method_name(s.method), format_number(p.error_m, kDigits), format_number(p.cdf, kDigits)});
    }

    std::string failures = "setup,method,message\n";
    for (const auto &f : result.failures)
    {
        std::string msg = f.message;
        std::replace_if(msg.begin(), msg.end(), [](char c) { return c == ',' || c == '\n'; }, ';');
        failures += csv_row({std::to_string(f.setup), method_name(f.method), msg});
    }

    const nlohmann::json run = {
        {"wall_seconds", result.wall_seconds},
        {"threads", result.threads_used},
        {"error_records", result.errors.size()},
        {"method_failures", result.failures.size()},
        {"low_confidence_aoa", result.low_confidence_aoa},
    };

    write_text_file((root / "errors.csv").string(), errors);
    write_text_file((root / "summary.csv").string(), summary);
    write_text_file((root / "cdf.csv").string(), cdf);
    write_text_file((root / "failures.csv").string(), failures);
    write_text_file((root / "config.echo.json").string(), config_to_json(result.config).dump(2) + '\n');
    write_text_file((root / "run.json").string(), run.dump(2) + '\n');
}

std::vector<ExperimentResult> sweep(const ExperimentConfig &cfg, const std::string &param,
                                    const std::vector<std::string> &values)
{
    if (values.empty())
        throw ConfigError("sweep: no values given for '" + param + "'");
    std::vector<ExperimentConfig> configs;
    for (const auto &v : values)
    {
        ExperimentConfig c = cfg;
        set_config_value(c, param, v);
        validate(c);
        configs.push_back(std::move(c));
    }
    std::vector<ExperimentResult> out;
    for (const auto &c : configs)
        out.push_back(run_experiment(c));
    return out;
}

} // namespace cfpos
