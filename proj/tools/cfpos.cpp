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

// Command-line front end: run, sweep and validate-config.

#include "cfpos/config.hpp"
#include "cfpos/errors.hpp"
#include "cfpos/harness.hpp"
#include "cfpos/io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

namespace
{
constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitPartial = 3;
constexpr int kExitIo = 4;

struct Overrides
{
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> setups;
    std::optional<std::size_t> testpoints;
    std::optional<std::size_t> threads;
    std::string methods;
};

void add_overrides(CLI::App &cmd, Overrides &o)
{
    cmd.add_option("--config", o.config_path, "TOML experiment configuration")->check(CLI::ExistingFile);
    cmd.add_option("--seed", o.seed, "master seed");
    cmd.add_option("--setups", o.setups, "number of setups");
    cmd.add_option("--testpoints", o.testpoints, "test points per setup");
    cmd.add_option("--threads", o.threads, "worker threads (0: all cores)");
    cmd.add_option("--methods", o.methods, "comma-separated method list");
}

cfpos::ExperimentConfig resolve(const Overrides &o, const std::string &out_dir)
{
    cfpos::ExperimentConfig cfg = o.config_path.empty() ? cfpos::ExperimentConfig{} : cfpos::load_config(o.config_path);
    if (o.seed)
        cfg.seed = *o.seed;
    if (o.setups)
        cfg.n_setups = *o.setups;
    if (o.testpoints)
        cfg.test_points = *o.testpoints;
    if (o.threads)
        cfg.threads = *o.threads;
    if (!o.methods.empty())
        cfpos::set_config_value(cfg, "methods", o.methods);
    if (!out_dir.empty())
        cfg.output_dir = out_dir;
    cfpos::validate(cfg);
    return cfg;
}

void print_summary(const cfpos::ExperimentResult &r)
{
    std::printf("%-12s %8s %10s %10s %10s\n", "method", "samples", "mean_m", "median_m", "p90_m");
    for (const auto &s : r.summaries)
        std::printf("%-12s %8zu %10.3f %10.3f %10.3f\n", cfpos::method_name(s.method), s.count, s.mean_m,
                    s.median_m, s.p90_m);
    for (const auto &f : r.failures)
        std::fprintf(stderr, "setup %zu, %s failed: %s\n", f.setup, cfpos::method_name(f.method), f.message.c_str());
    std::printf("%zu setups in %.1f s on %zu thread(s)\n", r.config.n_setups, r.wall_seconds, r.threads_used);
}

std::vector<std::string> split_values(const std::string &csv)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= csv.size())
    {
        const std::size_t end = std::min(csv.find(',', start), csv.size());
        if (end > start)
            out.push_back(csv.substr(start, end - start));
        start = end + 1;
    }
    return out;
}
} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"cfpos: fingerprint positioning experiments for cell-free massive MIMO"};
    app.require_subcommand(1);

    Overrides run_o;
    std::string run_out;
    auto *run = app.add_subcommand("run", "run one experiment and write its CSV outputs");
    add_overrides(*run, run_o);
    run->add_option("--out", run_out, "output directory (default: output_dir from the config)");

    Overrides sweep_o;
    std::string sweep_out, sweep_param, sweep_values;
    auto *sw = app.add_subcommand("sweep", "run one experiment per value of a configuration key");
    add_overrides(*sw, sweep_o);
    sw->add_option("--out", sweep_out, "parent output directory");
    sw->add_option("--param", sweep_param, "configuration key to vary")->required();
    sw->add_option("--values", sweep_values, "comma-separated values")->required();

    std::string validate_path;
    auto *val = app.add_subcommand("validate-config", "parse and validate a configuration file");
    val->add_option("file", validate_path, "TOML configuration")->required();

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try
    {
        if (*val)
        {
            const auto cfg = cfpos::load_config(validate_path);
            std::cout << cfpos::config_to_json(cfg).dump(2) << '\n';
            return kExitOk;
        }
        if (*run)
        {
            const auto cfg = resolve(run_o, run_out);
            const auto result = cfpos::run_experiment(cfg);
            cfpos::emit_outputs(result, cfg.output_dir);
            print_summary(result);
            return result.partial_failure() ? kExitPartial : kExitOk;
        }

        const auto cfg = resolve(sweep_o, sweep_out);
        const auto values = split_values(sweep_values);
        const auto results = cfpos::sweep(cfg, sweep_param, values);
        std::string table = "param,value,method,mean_m,median_m,p90_m\n";
        bool partial = false;
        for (std::size_t i = 0; i < results.size(); ++i)
        {
            const auto dir = (std::filesystem::path(cfg.output_dir) / (sweep_param + "_" + values[i])).string();
            cfpos::emit_outputs(results[i], dir);
            std::printf("%s = %s\n", sweep_param.c_str(), values[i].c_str());
            print_summary(results[i]);
            partial = partial || results[i].partial_failure();
            for (const auto &s : results[i].summaries)
                table += sweep_param + ',' + values[i] + ',' + cfpos::method_name(s.method) + ',' +
                         cfpos::format_number(s.mean_m, 9) + ',' + cfpos::format_number(s.median_m, 9) + ',' +
                         cfpos::format_number(s.p90_m, 9) + '\n';
        }
        cfpos::write_text_file((std::filesystem::path(cfg.output_dir) / "sweep.csv").string(), table);
        return partial ? kExitPartial : kExitOk;
    }
    catch (const cfpos::ConfigError &e)
    {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
    catch (const cfpos::IoError &e)
    {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kExitIo;
    }
}
