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

#ifndef CFPOS_SCENARIO_HPP
#define CFPOS_SCENARIO_HPP

#include "cfpos/numerics.hpp"

#include <json.hpp>

#include <cstddef>
#include <vector>

namespace cfpos
{

struct Position2D
{
    double x = 0.0; // meters
    double y = 0.0; // meters
    bool operator==(const Position2D &) const = default;
};

// Uniform linear array geometry shared by every AP of a setup. The array axis is the x-axis.
struct ArrayParams
{
    std::size_t antenna_count = 25; // N
    double element_spacing = 0.5;   // d / lambda
};

struct ApSite
{
    Position2D position;
    double height = 10.0; // meters
    std::size_t antenna_count = 25;
    double element_spacing = 0.5;
    bool operator==(const ApSite &) const = default;
};

struct Scenario
{
    std::vector<ApSite> aps;      // L sites
    std::vector<Position2D> rps;  // K reference points, row-major cell-centered grid
    double ue_height = 1.5;       // meters
    double area_side = 200.0;     // meters

    std::size_t grid_side() const; // sqrt(K)
    bool operator==(const Scenario &) const = default;
};

// L sites drawn i.i.d. uniform over [0, area_side]^2.
std::vector<ApSite> place_aps(double area_side, std::size_t n_aps, double height, const ArrayParams &array,
                              RngStream &rng);

// sqrt(K) x sqrt(K) grid with pitch area_side / sqrt(K), inset by half a pitch, x varying fastest.
std::vector<Position2D> make_rp_grid(double area_side, std::size_t n_rps);

std::vector<Position2D> sample_test_points(double area_side, std::size_t count, RngStream &rng);

// Azimuth of the AP -> UE line in degrees, (-180, 180]. Throws DomainError when horizontally coincident.
double nominal_aoa(const ApSite &ap, const Position2D &ue);

double distance_3d(const ApSite &ap, const Position2D &ue, double ue_height);

// Validates the Scenario invariants (grid shape, sites inside the area, positive heights).
void validate(const Scenario &s);

void to_json(nlohmann::json &j, const Position2D &p);
void from_json(const nlohmann::json &j, Position2D &p);
void to_json(nlohmann::json &j, const ApSite &ap);
void from_json(const nlohmann::json &j, ApSite &ap);

// Scenario documents carry the grid parameters (area, K) rather than the RP list; loading rebuilds the grid.
nlohmann::json scenario_to_json(const Scenario &s);
Scenario scenario_from_json(const nlohmann::json &j);

} // namespace cfpos

#endif
