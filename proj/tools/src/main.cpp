#include <cstdio>
#include <exception>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "bitsmooth/cli/config.hpp"
#include "bitsmooth/cli/experiments.hpp"
#include "bitsmooth/errors.hpp"

using namespace bitsmooth::cli;

int main(int argc, char** argv) {
    CLI::App app{"Recursive Bayesian CRLBs for 1-bit and unquantized measurements"};
    std::string experiment;
    std::string config_path;
    std::string experiments_list;
    for (auto e : kExperiments) experiments_list += (experiments_list.empty() ? "" : ", ") + std::string(e);
    app.add_option("experiment", experiment, "One of: " + experiments_list)->required();
    app.add_option("--config", config_path, "INI config file ([common] and per-experiment sections)");

    // Every config key doubles as a flag of the same name.
    std::map<std::string, std::string> overrides;
    for (const auto& key : config_keys())
        app.add_option("--" + key, overrides[key], "Override config key '" + key + "'");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (!is_experiment(experiment)) throw ConfigError("unknown experiment '" + experiment + "'");
        ExperimentConfig config =
            config_path.empty() ? default_config(experiment) : load_config(config_path, experiment);
        for (const auto& key : config_keys())
            if (app.count("--" + key) > 0) apply_setting(config, key, overrides[key]);
        config.validate();

        const RunResult result = run_experiment(config);
        for (const auto& line : result.lines) std::printf("%s\n", line.c_str());
        return result.exit_code;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitUsage;
    } catch (const SweepError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNonConvergence;
    } catch (const bitsmooth::ConvergenceError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNonConvergence;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    }
}
