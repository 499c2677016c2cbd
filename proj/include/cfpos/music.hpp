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

#ifndef CFPOS_MUSIC_HPP
#define CFPOS_MUSIC_HPP

#include "cfpos/numerics.hpp"

#include <string>
#include <utility>
#include <vector>

namespace cfpos
{

struct MusicConfig
{
    double grid_step_deg = 0.1;
    std::size_t n_sources = 1; // only single-source scenes are supported
    bool refine = true;        // 3-point parabolic refinement of the grid peak
};

void validate(const MusicConfig &cfg);

struct AoaEstimate
{
    double angle_deg = 0.0; // (-180, 180], on the hinted side
    double peak_value = 0.0;
    double grid_step_deg = 0.0;
    bool refined = false;
    bool low_confidence = false; // spectrum max / median < 1.5
};

// Values above this are reported as the cap (exact orthogonality between a(theta) and the noise subspace).
inline constexpr double kPseudospectrumCap = 1e18;

// Unit eigenvectors of the N-1 smallest eigenvalues, as the columns of an N x (N-1) matrix.
ComplexMatrix noise_subspace(const HermitianCovariance &r);

// 1 / (a^H Un Un^H a), capped at kPseudospectrumCap.
double pseudospectrum(const ComplexMatrix &un, double theta_deg, double spacing);

// Grid search over [0, 180] degrees; the result is theta for side_hint >= 0 and -theta otherwise.
AoaEstimate estimate_aoa(const HermitianCovariance &r, const MusicConfig &cfg, int side_hint, double spacing);

// (theta_deg, value) over the search grid, for inspection.
std::vector<std::pair<double, double>> pseudospectrum_trace(const HermitianCovariance &r, const MusicConfig &cfg,
                                                            double spacing);
void write_pseudospectrum_csv(const std::string &path, const std::vector<std::pair<double, double>> &trace);

} // namespace cfpos

#endif
