// Experiment configuration: INI-style files with a [common] section and one
// section per experiment, overridable key by key from the command line.
#pragma once

#include <cstdint>
#include <istream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bitsmooth/estimators.hpp"
#include "bitsmooth/qfim.hpp"

namespace bitsmooth::cli {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SnrGrid {
    double min_db = -40.0;
    double max_db = 10.0;
    double step_db = 0.5;

    /// min, min + step, ... up to max (inclusive within step/1e6).
    std::vector<double> points() const;

    friend bool operator==(const SnrGrid&, const SnrGrid&) = default;
};

struct McSettings {
    std::uint64_t seed = 1;
    std::int64_t trials = 2000;
    std::int64_t horizon = 500;
    std::int64_t delta = 50;

    friend bool operator==(const McSettings&, const McSettings&) = default;
};

struct ExperimentConfig {
    std::string experiment;
    std::vector<double> alpha;
    double sigma_eta = 1.0;
    double sigma0 = 1.0;
    double mu0 = 0.0;
    SnrGrid snr;
    double snr_db = -10.0;  // operating point of mse-validate
    QuadratureSpec quadrature;
    McSettings mc;
    std::int64_t grid_points = 2000;
    double grid_half_width = 8.0;
    unsigned threads = 1;
    std::string out;

    /// Throws ConfigError naming the offending field.
    void validate() const;

    GridSpec grid() const;
    /// Model at one (alpha, snr) point of the sweep.
    GaussMarkovModel model(double alpha, double snr) const;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

inline constexpr std::string_view kExperiments[] = {"fig1", "fig2", "ratios", "mse-validate",
                                                    "selftest"};

bool is_experiment(std::string_view name) noexcept;

/// Names of all keys accepted in files and as --key flags.
const std::vector<std::string>& config_keys();

ExperimentConfig default_config(std::string_view experiment);

/// Applies [common] then [<experiment>] from an INI stream over the defaults.
ExperimentConfig parse_config(std::istream& in, std::string_view experiment);
ExperimentConfig load_config(const std::string& path, std::string_view experiment);

/// Sets one key from its textual value; throws ConfigError on unknown keys or
/// malformed values.
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);

/// INI text with every key in the experiment's section; parse_config on the
/// result reproduces the config exactly (doubles are written with 17 digits).
std::string serialize(const ExperimentConfig& config);

/// FNV-1a (64-bit, hex) of the serialized config, excluding the output path
/// and the thread count, which do not affect results.
std::string config_hash(const ExperimentConfig& config);

}  // namespace bitsmooth::cli
