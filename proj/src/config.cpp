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

#include "cfpos/config.hpp"
#include "cfpos/errors.hpp"
#include "cfpos/io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <cmath>
#include <functional>
#include <utility>

namespace cfpos
{

namespace
{
constexpr std::array<std::pair<Method, const char *>, 7> kMethodNames{{
    {Method::hybrid_gpr, "hybrid_gpr"},
    {Method::rss_gpr, "rss_gpr"},
    {Method::aoa_gpr, "aoa_gpr"},
    {Method::wknn_rss, "wknn_rss"},
    {Method::wknn_hybrid, "wknn_hybrid"},
    {Method::lr_rss, "lr_rss"},
    {Method::lr_hybrid, "lr_hybrid"},
}};
} // namespace

const char *method_name(Method m)
{
    for (const auto &[id, name] : kMethodNames)
        if (id == m)
            return name;
    return "unknown";
}

Method parse_method(const std::string &name)
{
    for (const auto &[id, n] : kMethodNames)
        if (name == n)
            return id;
    throw ConfigError("unknown method '" + name + "'");
}

PathLossParams ExperimentConfig::pathloss() const
{
    return {p0_db, d0, gamma, sigma_sf_db, d_corr};
}

RadioParams ExperimentConfig::radio() const
{
    RadioParams r;
    r.tx_power_mw = tx_power_mw;
    r.noise_power_mw = db_to_linear(noise_power_dbm);
    r.n_samples = n_samples;
    r.angular_spread_deg = angular_spread_deg;
    return r;
}

MusicConfig ExperimentConfig::music() const
{
    MusicConfig m;
    m.grid_step_deg = music_grid_step_deg;
    return m;
}

void validate(const ExperimentConfig &cfg)
{
    auto require = [](bool ok, const char *msg) {
        if (!ok)
            throw ConfigError(std::string("config: ") + msg);
    };
    require(cfg.carrier_hz > 0.0, "carrier_hz must be positive");
    require(cfg.n_aps >= 1, "n_aps must be positive");
    require(cfg.n_antennas >= 2, "n_antennas must be at least 2 for MUSIC");
    require(cfg.n_rps >= 4, "n_rps must be at least 4");
    const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(cfg.n_rps))));
    require(side * side == cfg.n_rps, "n_rps must be a perfect square");
    require(cfg.test_points >= 1, "test_points must be positive");
    require(cfg.n_setups >= 1, "n_setups must be positive");
    require(!cfg.methods.empty(), "methods must be non-empty");
    for (std::size_t i = 0; i < cfg.methods.size(); ++i)
        require(std::find(cfg.methods.begin(), cfg.methods.begin() + i, cfg.methods[i]) ==
                    cfg.methods.begin() + i,
                "methods must not repeat");
    require(cfg.ap_height > 0.0 && cfg.ue_height > 0.0 && cfg.ap_height != cfg.ue_height,
            "heights must be positive and distinct");
    require(cfg.area_side > 0.0, "area_side must be positive");
    require(cfg.gpr_restarts >= 1, "gpr_restarts must be positive");
    require(cfg.wknn_k >= 1 && cfg.wknn_k <= cfg.n_rps, "wknn_k must lie in [1, n_rps]");
    require(cfg.aoa_noise_std_deg >= 0.0, "aoa_noise_std_deg must be non-negative");
    require(std::isfinite(cfg.noise_power_dbm), "noise_power_dbm must be finite");
    validate(cfg.pathloss());
    validate(cfg.radio());
    validate(cfg.music());
    require(cfg.element_spacing > 0.0 && cfg.element_spacing <= 0.5, "element_spacing must lie in (0, 0.5]");
}

// ---------------------------------------------------------------------------------------------
// Flat TOML reader

namespace
{
class TomlLexer
{
public:
    TomlLexer(const std::string &line, std::size_t line_no) : s_(line), line_(line_no) {}

    [[noreturn]] void fail(const std::string &msg) const
    {
        throw ConfigError("config line " + std::to_string(line_) + ": " + msg);
    }

    void skip_ws()
    {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t'))
            ++pos_;
    }

    bool at_end_or_comment()
    {
        skip_ws();
        return pos_ >= s_.size() || s_[pos_] == '#';
    }

    std::string key()
    {
        skip_ws();
        const std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' ||
                                    s_[pos_] == '-'))
            ++pos_;
        if (pos_ == start)
        {
            if (pos_ < s_.size() && s_[pos_] == '[')
                fail("tables are not supported");
            fail("expected a bare key");
        }
        if (pos_ < s_.size() && s_[pos_] == '.')
            fail("dotted keys are not supported");
        return s_.substr(start, pos_ - start);
    }

    void expect(char c)
    {
        skip_ws();
        if (pos_ >= s_.size() || s_[pos_] != c)
            fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    TomlValue value(bool allow_array = true)
    {
        skip_ws();
        if (pos_ >= s_.size())
            fail("missing value");
        const char c = s_[pos_];
        if (c == '"')
            return {basic_string()};
        if (c == '\'')
            return {literal_string()};
        if (c == '[')
        {
            if (!allow_array)
                fail("nested arrays are not supported");
            return {array()};
        }
        if (c == '{')
            fail("inline tables are not supported");
        return scalar();
    }

private:
    std::string basic_string()
    {
        ++pos_;
        std::string out;
        while (pos_ < s_.size() && s_[pos_] != '"')
        {
            char c = s_[pos_++];
            if (c == '\\')
            {
                if (pos_ >= s_.size())
                    fail("unterminated escape");
                switch (s_[pos_++])
                {
                case '"': c = '"'; break;
                case '\\': c = '\\'; break;
                case 'n': c = '\n'; break;
                case 't': c = '\t'; break;
                case 'r': c = '\r'; break;
                default: fail("unsupported escape sequence");
                }
            }
            out += c;
        }
        if (pos_ >= s_.size())
            fail("unterminated string");
        ++pos_;
        return out;
    }

    std::string literal_string()
    {
        const std::size_t end = s_.find('\'', pos_ + 1);
        if (end == std::string::npos)
            fail("unterminated string");
        std::string out = s_.substr(pos_ + 1, end - pos_ - 1);
        pos_ = end + 1;
        return out;
    }

    TomlArray array()
    {
        ++pos_;
        TomlArray out;
        for (;;)
        {
            skip_ws();
            if (pos_ < s_.size() && s_[pos_] == ']')
            {
                ++pos_;
                return out;
            }
            out.push_back(value(false));
            skip_ws();
            if (pos_ < s_.size() && s_[pos_] == ',')
                ++pos_;
            else if (pos_ >= s_.size() || s_[pos_] != ']')
                fail("expected ',' or ']' in array (arrays must fit on one line)");
        }
    }

    TomlValue scalar()
    {
        const std::size_t start = pos_;
        while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' && s_[pos_] != '#' && s_[pos_] != ' ' &&
               s_[pos_] != '\t')
            ++pos_;
        std::string tok = s_.substr(start, pos_ - start);
        if (tok == "true")
            return {true};
        if (tok == "false")
            return {false};
        tok.erase(std::remove(tok.begin(), tok.end(), '_'), tok.end());
        std::string body = tok;
        if (!body.empty() && (body[0] == '+' || body[0] == '-'))
            body.erase(0, 1);
        if (body == "inf" || body == "nan")
            return {parse_number(tok[0] == '-' ? "-" + body : body, "config line " + std::to_string(line_))};
        if (body.empty() || !std::all_of(body.begin(), body.end(), [](char ch) {
                return std::isdigit(static_cast<unsigned char>(ch)) || ch == '.' || ch == 'e' || ch == 'E' ||
                       ch == '+' || ch == '-';
            }))
            fail("unrecognized value '" + s_.substr(start, pos_ - start) + "'");
        const bool is_float = body.find_first_of(".eE") != std::string::npos;
        if (!is_float)
        {
            errno = 0;
            char *end = nullptr;
            const long long v = std::strtoll(tok.c_str(), &end, 10);
            if (errno == ERANGE || *end != '\0')
                fail("invalid integer '" + tok + "'");
            return {static_cast<std::int64_t>(v)};
        }
        return {parse_number(tok, "config line " + std::to_string(line_))};
    }

    const std::string &s_;
    std::size_t line_;
    std::size_t pos_ = 0;
};

const char *type_name(const TomlValue &v)
{
    static constexpr const char *names[] = {"boolean", "integer", "float", "string", "array"};
    return names[v.v.index()];
}

double as_double(const std::string &key, const TomlValue &v)
{
    if (const auto *i = std::get_if<std::int64_t>(&v.v))
        return static_cast<double>(*i);
    if (const auto *d = std::get_if<double>(&v.v))
        return *d;
    throw ConfigError("config key '" + key + "': expected a number, got " + type_name(v));
}

std::int64_t as_int(const std::string &key, const TomlValue &v)
{
    if (const auto *i = std::get_if<std::int64_t>(&v.v))
        return *i;
    throw ConfigError("config key '" + key + "': expected an integer, got " + type_name(v));
}

std::size_t as_count(const std::string &key, const TomlValue &v)
{
    const auto i = as_int(key, v);
    if (i < 0)
        throw ConfigError("config key '" + key + "': must be non-negative");
    return static_cast<std::size_t>(i);
}

bool as_bool(const std::string &key, const TomlValue &v)
{
    if (const auto *b = std::get_if<bool>(&v.v))
        return *b;
    throw ConfigError("config key '" + key + "': expected a boolean, got " + type_name(v));
}

std::string as_string(const std::string &key, const TomlValue &v)
{
    if (const auto *s = std::get_if<std::string>(&v.v))
        return *s;
    throw ConfigError("config key '" + key + "': expected a string, got " + type_name(v));
}

std::vector<Method> as_methods(const std::string &key, const TomlValue &v)
{
    std::vector<Method> out;
    if (const auto *s = std::get_if<std::string>(&v.v))
    {
        // comma-separated form, as accepted on the command line
        std::size_t start = 0;
        while (start <= s->size())
        {
            const std::size_t end = std::min(s->find(',', start), s->size());
            if (end > start)
                out.push_back(parse_method(s->substr(start, end - start)));
            start = end + 1;
        }
        return out;
    }
    const auto *arr = std::get_if<TomlArray>(&v.v);
    if (!arr)
        throw ConfigError("config key '" + key + "': expected an array of method names");
    for (const auto &e : *arr)
        out.push_back(parse_method(as_string(key, e)));
    return out;
}

using Setter = std::function<void(ExperimentConfig &, const std::string &, const TomlValue &)>;

#define CFPOS_REAL(field) {#field, [](ExperimentConfig &c, const std::string &k, const TomlValue &v) { c.field = as_double(k, v); }}
#define CFPOS_COUNT(field) {#field, [](ExperimentConfig &c, const std::string &k, const TomlValue &v) { c.field = as_count(k, v); }}

const std::map<std::string, Setter> &setters()
{
    static const std::map<std::string, Setter> table{
        CFPOS_REAL(carrier_hz),
        CFPOS_COUNT(n_aps),
        CFPOS_REAL(element_spacing),
        CFPOS_REAL(ap_height),
        CFPOS_REAL(ue_height),
        CFPOS_REAL(area_side),
        CFPOS_REAL(tx_power_mw),
        CFPOS_REAL(noise_power_dbm),
        CFPOS_REAL(p0_db),
        CFPOS_REAL(d0),
        CFPOS_REAL(gamma),
        CFPOS_REAL(sigma_sf_db),
        CFPOS_REAL(d_corr),
        CFPOS_COUNT(n_samples),
        CFPOS_REAL(angular_spread_deg),
        CFPOS_COUNT(n_rps),
        CFPOS_COUNT(n_antennas),
        CFPOS_COUNT(test_points),
        CFPOS_COUNT(n_setups),
        CFPOS_REAL(aoa_noise_std_deg),
        CFPOS_REAL(music_grid_step_deg),
        CFPOS_COUNT(gpr_restarts),
        CFPOS_COUNT(wknn_k),
        CFPOS_COUNT(threads),
        {"methods", [](ExperimentConfig &c, const std::string &k, const TomlValue &v) { c.methods = as_methods(k, v); }},
        {"seed", [](ExperimentConfig &c, const std::string &k, const TomlValue &v) { c.seed = as_count(k, v); }},
        {"output_dir", [](ExperimentConfig &c, const std::string &k, const TomlValue &v) { c.output_dir = as_string(k, v); }},
        {"standardize_features",
         [](ExperimentConfig &c, const std::string &k, const TomlValue &v) { c.standardize_features = as_bool(k, v); }},
    };
    return table;
}

#undef CFPOS_REAL
#undef CFPOS_COUNT

void apply(ExperimentConfig &cfg, const std::string &key, const TomlValue &value)
{
    const auto &table = setters();
    const auto it = table.find(key);
    if (it == table.end())
        throw ConfigError("unknown config key '" + key + "'");
    it->second(cfg, key, value);
}
} // namespace

std::map<std::string, TomlValue> parse_flat_toml(const std::string &text)
{
    std::map<std::string, TomlValue> out;
    std::size_t start = 0, line_no = 0;
    while (start < text.size())
    {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos)
            end = text.size();
        std::string line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        start = end + 1;
        ++line_no;

        TomlLexer lex(line, line_no);
        if (lex.at_end_or_comment())
            continue;
        const std::string key = lex.key();
        lex.expect('=');
        TomlValue value = lex.value();
        if (!lex.at_end_or_comment())
            lex.fail("trailing characters after value");
        if (!out.emplace(key, std::move(value)).second)
            lex.fail("duplicate key '" + key + "'");
    }
    return out;
}

ExperimentConfig config_from_toml(const std::string &text)
{
    ExperimentConfig cfg;
    for (const auto &[key, value] : parse_flat_toml(text))
        apply(cfg, key, value);
    validate(cfg);
    return cfg;
}

ExperimentConfig load_config(const std::string &path)
{
    const std::string text = read_text_file(path);
    try
    {
        return config_from_toml(text);
    }
    catch (const ConfigError &e)
    {
        throw ConfigError(path + ": " + e.what());
    }
}

void set_config_value(ExperimentConfig &cfg, const std::string &key, const std::string &value)
{
    TomlValue v;
    try
    {
        v = parse_flat_toml(key + " = " + value).at(key);
    }
    catch (const ConfigError &)
    {
        v.v = value; // bare words such as method lists or paths
    }
    apply(cfg, key, v);
}

nlohmann::json config_to_json(const ExperimentConfig &cfg)
{
    nlohmann::json methods = nlohmann::json::array();
    for (Method m : cfg.methods)
        methods.push_back(method_name(m));
    return {
        {"carrier_hz", cfg.carrier_hz},
        {"n_aps", cfg.n_aps},
        {"element_spacing", cfg.element_spacing},
        {"ap_height", cfg.ap_height},
        {"ue_height", cfg.ue_height},
        {"area_side", cfg.area_side},
        {"tx_power_mw", cfg.tx_power_mw},
        {"noise_power_dbm", cfg.noise_power_dbm},
        {"p0_db", cfg.p0_db},
        {"d0", cfg.d0},
        {"gamma", cfg.gamma},
        {"sigma_sf_db", cfg.sigma_sf_db},
        {"d_corr", cfg.d_corr},
        {"n_samples", cfg.n_samples},
        {"angular_spread_deg", cfg.angular_spread_deg},
        {"n_rps", cfg.n_rps},
        {"n_antennas", cfg.n_antennas},
        {"test_points", cfg.test_points},
        {"n_setups", cfg.n_setups},
        {"methods", methods},
        {"seed", cfg.seed},
        {"output_dir", cfg.output_dir},
        {"standardize_features", cfg.standardize_features},
        {"aoa_noise_std_deg", cfg.aoa_noise_std_deg},
        {"music_grid_step_deg", cfg.music_grid_step_deg},
        {"gpr_restarts", cfg.gpr_restarts},
        {"wknn_k", cfg.wknn_k},
        {"threads", cfg.threads},
    };
}

} // namespace cfpos
