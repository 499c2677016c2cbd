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

#ifndef CFPOS_CONFIG_HPP
#define CFPOS_CONFIG_HPP

#include "cfpos/channel.hpp"
#include "cfpos/music.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace cfpos
{

enum class Method
{
    hybrid_gpr,
    rss_gpr,
    aoa_gpr,
    wknn_rss,
    wknn_hybrid,
    lr_rss,
    lr_hybrid,
};

const char *method_name(Method m);
Method parse_method(const std::string &name); // ConfigError on unknown names

// Experiment parameters. Defaults are the desk-scale run: 10 setups x 100 test points.
struct ExperimentConfig
{
    double carrier_hz = 2e9; // echoed only; geometry is expressed in wavelengths
    std::size_t n_aps = 25;
    double element_spacing = 0.5; // wavelengths
    double ap_height = 10.0;
    double ue_height = 1.5;
    double area_side = 200.0;
    double tx_power_mw = 100.0;
    double noise_power_dbm = -96.0;
    double p0_db = -28.8;
    double d0 = 1.0;
    double gamma = 3.53;
    double sigma_sf_db = 8.0;
    double d_corr = 13.0;
    std::size_t n_samples = 200;
    double angular_spread_deg = 10.0;
    std::size_t n_rps = 225;
    std::size_t n_antennas = 25;
    std::size_t test_points = 100;
    std::size_t n_setups = 10;
    std::vector<Method> methods{Method::hybrid_gpr, Method::rss_gpr, Method::aoa_gpr, Method::wknn_rss,
                                Method::lr_rss};
    std::uint64_t seed = 1;
    std::string output_dir = "results";
    bool standardize_features = true;
    double aoa_noise_std_deg = 2.0;
    double music_grid_step_deg = 0.1;
    std::size_t gpr_restarts = 5;
    std::size_t wknn_k = 4;
    std::size_t threads = 0; // 0: hardware concurrency

    PathLossParams pathloss() const;
    RadioParams radio() const;
    MusicConfig music() const;
};

void validate(const ExperimentConfig &cfg);

// Scalar or flat-array value of the supported TOML subset.
struct TomlValue;
using TomlArray = std::vector<TomlValue>;
struct TomlValue
{
    std::variant<bool, std::int64_t, double, std::string, TomlArray> v;
};

// Flat TOML: `key = value` lines, comments, basic and literal strings, integers, floats, booleans and
// single-line arrays. Tables, dotted keys and multi-line values are rejected.
std::map<std::string, TomlValue> parse_flat_toml(const std::string &text);

// Starts from the defaults and overrides every key present. Unknown keys and type mismatches throw.
ExperimentConfig config_from_toml(const std::string &text);
ExperimentConfig load_config(const std::string &path);

// Applies one override given as text, e.g. ("n_antennas", "16"); used by sweeps and the CLI.
void set_config_value(ExperimentConfig &cfg, const std::string &key, const std::string &value);

nlohmann::json config_to_json(const ExperimentConfig &cfg);

} // namespace cfpos

#endif
