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

#include "cfpos/fingerprint.hpp"
#include "cfpos/errors.hpp"
#include "cfpos/io.hpp"

#include <cmath>
#include <filesystem>

namespace cfpos
{

double wrap_deg(double angle)
{
    double a = std::fmod(angle, 360.0);
    if (a <= -180.0)
        a += 360.0;
    else if (a > 180.0)
        a -= 360.0;
    return a;
}

int side_hint(const ApSite &ap, const Position2D &ue)
{
    return ue.y >= ap.position.y ? +1 : -1;
}

void validate(const FingerprintDb &db)
{
    const std::size_t k = db.rp_positions.size();
    if (db.rss_db.rows() != k || db.aoa_deg.rows() != k || db.rss_db.cols() != db.aoa_deg.cols())
        throw ConfigError("fingerprint database: inconsistent matrix dimensions");
    for (double v : db.rss_db.data())
        if (!std::isfinite(v))
            throw ConfigError("fingerprint database: non-finite RSS entry");
    for (double v : db.aoa_deg.data())
        if (!(v > -180.0 && v <= 180.0))
            throw ConfigError("fingerprint database: AOA entry outside (-180, 180]");
}

FingerprintDb build_offline_db(const Scenario &scenario, const PathLossParams &pathloss, const RadioParams &radio,
                               const ShadowField &shadow, double aoa_noise_std_deg, RngStream &rng)
{
    const std::size_t k_count = scenario.rps.size(), l_count = scenario.aps.size();
    if (shadow.n_aps() != l_count || shadow.points.size() < k_count)
        throw ConfigError("offline database: shadow field does not cover every RP and AP");
    for (std::size_t k = 0; k < k_count; ++k)
        if (!(shadow.points[k] == scenario.rps[k]))
            throw ConfigError("offline database: shadow point order differs from the RP grid");
    if (!(aoa_noise_std_deg >= 0.0))
        throw ConfigError("offline database: AOA noise standard deviation must be non-negative");

    FingerprintDb db;
    db.rp_positions = scenario.rps;
    db.rss_db = RealMatrix(k_count, l_count);
    db.aoa_deg = RealMatrix(k_count, l_count);
    for (std::size_t k = 0; k < k_count; ++k)
        for (std::size_t l = 0; l < l_count; ++l)
        {
            const auto &ap = scenario.aps[l];
            RngStream child = rng.derive(k * l_count + l);
            const auto link =
                make_link_stats(ap, scenario.rps[k], scenario.ue_height, pathloss, radio, shadow.at(l, k));
            db.rss_db(k, l) = estimate_rss_db(synthesize_samples(link, radio, child), radio.tx_power_mw);
            db.aoa_deg(k, l) = wrap_deg(link.nominal_aoa_deg + aoa_noise_std_deg * child.normal());
        }
    return db;
}

TestVector build_online_vector(const Scenario &scenario, const Position2D &tp, std::size_t shadow_index,
                               const PathLossParams &pathloss, const RadioParams &radio, const ShadowField &shadow,
                               const MusicConfig &music, RngStream &rng)
{
    const std::size_t l_count = scenario.aps.size();
    if (shadow.n_aps() != l_count || shadow_index >= shadow.points.size())
        throw ConfigError("online vector: shadow field does not cover the test point");

    TestVector v;
    v.truth = tp;
    v.rss_db.resize(l_count);
    v.aoa_deg.resize(l_count);
    for (std::size_t l = 0; l < l_count; ++l)
    {
        const auto &ap = scenario.aps[l];
        RngStream child = rng.derive(l);
        const auto link = make_link_stats(ap, tp, scenario.ue_height, pathloss, radio, shadow.at(l, shadow_index));
        const auto batch = synthesize_samples(link, radio, child);
        v.rss_db[l] = estimate_rss_db(batch, radio.tx_power_mw);
        const auto est = estimate_aoa(estimate_sample_cov(batch).cov, music, side_hint(ap, tp), ap.element_spacing);
        v.aoa_deg[l] = est.angle_deg;
        v.low_confidence_aoa += est.low_confidence;
    }
    return v;
}

FeatureMatrix assemble_features(const FingerprintDb &db, FeatureMode mode)
{
    const std::size_t k = db.n_rps(), l = db.n_aps();
    const bool rss = mode != FeatureMode::aoa_only, aoa = mode != FeatureMode::rss_only;
    FeatureMatrix f;
    f.values = RealMatrix(k, (rss ? l : 0) + (aoa ? l : 0));
    if (rss)
        f.column_kinds.insert(f.column_kinds.end(), l, ColumnKind::rss_db);
    if (aoa)
        f.column_kinds.insert(f.column_kinds.end(), l, ColumnKind::aoa_deg);
    for (std::size_t r = 0; r < k; ++r)
    {
        std::size_t c = 0;
        if (rss)
            for (std::size_t j = 0; j < l; ++j)
                f.values(r, c++) = db.rss_db(r, j);
        if (aoa)
            for (std::size_t j = 0; j < l; ++j)
                f.values(r, c++) = db.aoa_deg(r, j);
    }
    return f;
}

std::vector<double> assemble_features(const TestVector &v, FeatureMode mode)
{
    std::vector<double> out;
    if (mode != FeatureMode::aoa_only)
        out.insert(out.end(), v.rss_db.begin(), v.rss_db.end());
    if (mode != FeatureMode::rss_only)
        out.insert(out.end(), v.aoa_deg.begin(), v.aoa_deg.end());
    return out;
}

namespace
{
std::string matrix_csv(const RealMatrix &m)
{
    std::string s;
    for (std::size_t c = 0; c < m.cols(); ++c)
        s += (c ? ",ap" : "ap") + std::to_string(c);
    s += '\n';
    for (std::size_t r = 0; r < m.rows(); ++r)
    {
        for (std::size_t c = 0; c < m.cols(); ++c)
        {
            if (c)
                s += ',';
            s += format_number(m(r, c), 17);
        }
        s += '\n';
    }
    return s;
}

RealMatrix matrix_from_csv(const std::string &path, std::size_t expected_rows)
{
    const auto rows = read_csv(path);
    if (rows.empty() || rows.size() - 1 != expected_rows)
        throw ConfigError(path + ": unexpected row count");
    const std::size_t cols = rows[0].size();
    RealMatrix m(expected_rows, cols);
    for (std::size_t r = 0; r < expected_rows; ++r)
    {
        if (rows[r + 1].size() != cols)
            throw ConfigError(path + ": ragged row " + std::to_string(r + 1));
        for (std::size_t c = 0; c < cols; ++c)
            m(r, c) = parse_number(rows[r + 1][c], path);
    }
    return m;
}
} // namespace

void save_db(const FingerprintDb &db, const std::string &dir)
{
    validate(db);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw IoError("cannot create directory " + dir + ": " + ec.message());
    std::string pos = "x,y\n";
    for (const auto &p : db.rp_positions)
        pos += format_number(p.x, 17) + ',' + format_number(p.y, 17) + '\n';
    const std::filesystem::path root(dir);
    write_text_file((root / "positions.csv").string(), pos);
    write_text_file((root / "rss.csv").string(), matrix_csv(db.rss_db));
    write_text_file((root / "aoa.csv").string(), matrix_csv(db.aoa_deg));
}

FingerprintDb load_db(const std::string &dir)
{
    const std::filesystem::path root(dir);
    const auto pos_path = (root / "positions.csv").string();
    const auto rows = read_csv(pos_path);
    if (rows.empty() || rows[0] != std::vector<std::string>{"x", "y"})
        throw ConfigError(pos_path + ": expected header x,y");
    FingerprintDb db;
    for (std::size_t r = 1; r < rows.size(); ++r)
    {
        if (rows[r].size() != 2)
            throw ConfigError(pos_path + ": ragged row " + std::to_string(r));
        db.rp_positions.push_back({parse_number(rows[r][0], pos_path), parse_number(rows[r][1], pos_path)});
    }
    db.rss_db = matrix_from_csv((root / "rss.csv").string(), db.rp_positions.size());
    db.aoa_deg = matrix_from_csv((root / "aoa.csv").string(), db.rp_positions.size());
    validate(db);
    return db;
}

} // namespace cfpos
