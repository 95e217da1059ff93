/*
   Copyright 2026 The amswave Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

// amswave command line: amswave <subcommand> --config FILE [--seed S]
// [--workers W] [--out-dir DIR]

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "amswave/ams.hpp"
#include "amswave/config.hpp"
#include "amswave/expression.hpp"
#include "amswave/experiment.hpp"
#include "amswave/report.hpp"

namespace {

int fail(const nlohmann::ordered_json& err, int code)
{
    std::cerr << amswave::dump_json(err);
    return code;
}

} // namespace

int main(int argc, char** argv)
{
    using namespace amswave;

    CLI::App app{"Adaptive multilevel splitting and Fleming-Viot experiments"};
    app.require_subcommand(1, 1);
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::optional<std::string> out_dir;
    for (const std::string& name : subcommands()) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON experiment config")->required();
        sub->add_option("--seed", seed, "override the config seed");
        sub->add_option("--workers", workers, "override the worker count")->check(CLI::PositiveNumber);
        sub->add_option("--out-dir", out_dir, "override the output directory");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        return fail(error_object("usage", e.what()), 2);
    }
    const std::string subcommand = app.get_subcommands().front()->get_name();

    try {
        ExperimentConfig cfg = load_config(config_path);
        if (seed) cfg.seed = *seed;
        if (workers) cfg.workers = *workers;
        if (out_dir) cfg.out_dir = *out_dir;

        const ExperimentResult result = run_experiment(cfg, subcommand);
        const auto report = make_report(cfg, result, utc_timestamp());
        write_outputs(cfg.out_dir, report, result);
        std::cout << dump_json({{"subcommand", subcommand},
                                {"out_dir", cfg.out_dir},
                                {"exit_code", result.exit_code},
                                {"results", result.results}});
        return result.exit_code;
    } catch (const ConfigError& e) {
        return fail(error_object("config", "invalid config", e.errors()), 3);
    } catch (const ParseError& e) {
        return fail(error_object("expression", e.what()), 3);
    } catch (const ExplosionError& e) {
        return fail(error_object("explosion", e.what()), 4);
    } catch (const CensoredError& e) {
        return fail(error_object("censored", e.what()), 4);
    } catch (const ModelError& e) {
        return fail(error_object("model", e.what()), 4);
    } catch (const std::exception& e) {
        return fail(error_object("internal", e.what()), 5);
    }
}
