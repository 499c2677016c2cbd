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

#include "cfpos/scenario.hpp"
#include "cfpos/errors.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace cfpos
{

namespace
{
std::size_t isqrt(std::size_t k)
{
    auto r = static_cast<std::size_t>(std::sqrt(static_cast<double>(k)));
    while (r * r > k)
        --r;
    while ((r + 1) * (r + 1) <= k)
        ++r;
    return r;
}
} // namespace

std::size_t Scenario::grid_side() const
{
    return isqrt(rps.size());
}

std::vector<ApSite> place_aps(double area_side, std::size_t n_aps, double height, const ArrayParams &array,
                              RngStream &rng)
{
    if (n_aps == 0)
        throw ConfigError("place_aps: number of APs must be at least 1");
    if (!(area_side > 0.0))
        throw ConfigError("place_aps: area side must be positive");
    if (!(height > 0.0))
        throw ConfigError("place_aps: AP height must be positive");
    if (array.antenna_count < 2)
        throw ConfigError("place_aps: AP arrays need at least 2 antennas");
    if (!(array.element_spacing > 0.0))
        throw ConfigError("place_aps: element spacing must be positive");

    std::vector<ApSite> aps(n_aps);
    for (auto &ap : aps)
    {
        ap.position.x = rng.uniform(0.0, area_side);
        ap.position.y = rng.uniform(0.0, area_side);
        ap.height = height;
        ap.antenna_count = array.antenna_count;
        ap.element_spacing = array.element_spacing;
    }
    return aps;
}

std::vector<Position2D> make_rp_grid(double area_side, std::size_t n_rps)
{
    const std::size_t side = isqrt(n_rps);
    if (n_rps == 0 || side * side != n_rps)
    {
        std::ostringstream msg;
        msg << "make_rp_grid: K = " << n_rps << " is not a perfect square (nearest: " << side * side << " and "
            << (side + 1) * (side + 1) << ")";
        throw ConfigError(msg.str());
    }
    if (!(area_side > 0.0))
        throw ConfigError("make_rp_grid: area side must be positive");

    const double pitch = area_side / static_cast<double>(side);
    std::vector<Position2D> grid;
    grid.reserve(n_rps);
    for (std::size_t iy = 0; iy < side; ++iy)
        for (std::size_t ix = 0; ix < side; ++ix)
            grid.push_back({(static_cast<double>(ix) + 0.5) * pitch, (static_cast<double>(iy) + 0.5) * pitch});
    return grid;
}

std::vector<Position2D> sample_test_points(double area_side, std::size_t count, RngStream &rng)
{
    if (count == 0)
        throw ConfigError("sample_test_points: count must be at least 1");
    std::vector<Position2D> pts(count);
    for (auto &p : pts)
    {
        p.x = rng.uniform(0.0, area_side);
        p.y = rng.uniform(0.0, area_side);
    }
    return pts;
}

double nominal_aoa(const ApSite &ap, const Position2D &ue)
{
    const double dx = ue.x - ap.position.x;
    const double dy = ue.y - ap.position.y;
    if (dx == 0.0 && dy == 0.0)
        throw DomainError("nominal_aoa: UE is horizontally coincident with the AP");
    const double deg = std::atan2(dy, dx) * (180.0 / std::numbers::pi);
    return deg == -180.0 ? 180.0 : deg;
}

double distance_3d(const ApSite &ap, const Position2D &ue, double ue_height)
{
    const double dx = ue.x - ap.position.x;
    const double dy = ue.y - ap.position.y;
    const double dz = ap.height - ue_height;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

void validate(const Scenario &s)
{
    if (s.aps.empty())
        throw ConfigError("scenario: at least one AP is required");
    if (s.rps.size() < 4)
        throw ConfigError("scenario: at least 4 reference points are required");
    if (make_rp_grid(s.area_side, s.rps.size()) != s.rps)
        throw ConfigError("scenario: reference points do not form the declared grid");
    auto inside = [&](const Position2D &p) {
        return p.x >= 0.0 && p.x <= s.area_side && p.y >= 0.0 && p.y <= s.area_side;
    };
    for (const auto &ap : s.aps)
    {
        if (!inside(ap.position))
            throw ConfigError("scenario: AP outside the area");
        if (!(ap.height > 0.0) || ap.antenna_count < 2 || !(ap.element_spacing > 0.0))
            throw ConfigError("scenario: invalid AP site parameters");
    }
    if (!(s.ue_height >= 0.0))
        throw ConfigError("scenario: UE height must be non-negative");
}

void to_json(nlohmann::json &j, const Position2D &p)
{
    j = nlohmann::json{{"x", p.x}, {"y", p.y}};
}

void from_json(const nlohmann::json &j, Position2D &p)
{
    j.at("x").get_to(p.x);
    j.at("y").get_to(p.y);
}

void to_json(nlohmann::json &j, const ApSite &ap)
{
    j = nlohmann::json{{"position", ap.position},
                       {"height", ap.height},
                       {"antenna_count", ap.antenna_count},
                       {"element_spacing", ap.element_spacing}};
}

void from_json(const nlohmann::json &j, ApSite &ap)
{
    j.at("position").get_to(ap.position);
    j.at("height").get_to(ap.height);
    j.at("antenna_count").get_to(ap.antenna_count);
    j.at("element_spacing").get_to(ap.element_spacing);
}

nlohmann::json scenario_to_json(const Scenario &s)
{
    return nlohmann::json{{"area_side", s.area_side},
                          {"ue_height", s.ue_height},
                          {"grid", {{"n_rps", s.rps.size()}, {"layout", "cell_centered_row_major"}}},
                          {"aps", s.aps}};
}

Scenario scenario_from_json(const nlohmann::json &j)
{
    Scenario s;
    try
    {
        j.at("area_side").get_to(s.area_side);
        j.at("ue_height").get_to(s.ue_height);
        j.at("aps").get_to(s.aps);
        s.rps = make_rp_grid(s.area_side, j.at("grid").at("n_rps").get<std::size_t>());
    }
    catch (const nlohmann::json::exception &e)
    {
        throw ConfigError(std::string("scenario document: ") + e.what());
    }
    validate(s);
    return s;
}

} // namespace cfpos
