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

#ifndef CFPOS_FINGERPRINT_HPP
#define CFPOS_FINGERPRINT_HPP

#include "cfpos/channel.hpp"
#include "cfpos/gpr.hpp"
#include "cfpos/music.hpp"
#include "cfpos/scenario.hpp"

#include <string>
#include <vector>

namespace cfpos
{

// Offline database: row k belongs to RP k, column l to AP l.
struct FingerprintDb
{
    std::vector<Position2D> rp_positions;
    RealMatrix rss_db;  // K x L
    RealMatrix aoa_deg; // K x L, wrapped to (-180, 180]

    std::size_t n_rps() const noexcept { return rp_positions.size(); }
    std::size_t n_aps() const noexcept { return rss_db.cols(); }
};

struct TestVector
{
    std::vector<double> rss_db;  // one per AP
    std::vector<double> aoa_deg; // one per AP
    Position2D truth;            // kept by the harness, never passed to estimators
    std::size_t low_confidence_aoa = 0;
};

enum class FeatureMode
{
    rss_only,
    aoa_only,
    hybrid // all RSS columns, then all AOA columns
};

// Angle mapped to (-180, 180].
double wrap_deg(double angle);

// Side of the array broadside axis the UE lies on: +1 when y_ue >= y_ap, else -1.
int side_hint(const ApSite &ap, const Position2D &ue);

void validate(const FingerprintDb &db);

// RSS from a synthesized S-sample batch per (RP, AP); AOA = geometry + N(0, aoa_noise_std_deg^2).
// RP k must be shadow point k. Each (k, l) pair draws from child stream k * L + l.
FingerprintDb build_offline_db(const Scenario &scenario, const PathLossParams &pathloss, const RadioParams &radio,
                               const ShadowField &shadow, double aoa_noise_std_deg, RngStream &rng);

// Online measurement at a test point stored as shadow point shadow_index: RSS estimate and MUSIC AOA
// per AP, with the side of each array resolved from the true geometry. AP l draws from child stream l.
TestVector build_online_vector(const Scenario &scenario, const Position2D &tp, std::size_t shadow_index,
                               const PathLossParams &pathloss, const RadioParams &radio, const ShadowField &shadow,
                               const MusicConfig &music, RngStream &rng);

FeatureMatrix assemble_features(const FingerprintDb &db, FeatureMode mode);
std::vector<double> assemble_features(const TestVector &v, FeatureMode mode);

// positions.csv, rss.csv and aoa.csv in dir, at 17 significant digits.
void save_db(const FingerprintDb &db, const std::string &dir);
FingerprintDb load_db(const std::string &dir);

} // namespace cfpos

#endif
