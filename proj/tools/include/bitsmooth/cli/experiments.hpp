// Experiment runners behind the `bitsmooth` command.
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "bitsmooth/cli/config.hpp"
#include "bitsmooth/estimators.hpp"
#include "bitsmooth/qfim.hpp"

namespace bitsmooth::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNonConvergence = 2;
inline constexpr int kExitValidation = 3;

/// A fixed-point solve failed at one sweep point.
class SweepError : public std::runtime_error {
public:
    SweepError(const std::string& what, double alpha, double snr_db)
        : std::runtime_error(what), alpha_(alpha), snr_db_(snr_db) {}
    double alpha() const noexcept { return alpha_; }
    double snr_db() const noexcept { return snr_db_; }

private:
    double alpha_;
    double snr_db_;
};

struct SweepRow {
    double snr_db = 0.0;
    double rho_sl_db = 0.0;
    double rho_f_db = 0.0;
    double rho_s_db = 0.0;
    double j_filter_unq = 0.0;
    double j_filter_q = 0.0;
    double j_smooth_unq = 0.0;
    double j_smooth_q = 0.0;
    bool converged = false;
};

/// Steady-state report at every point of the SNR grid, in increasing SNR.
std::vector<SweepRow> sweep(const ExperimentConfig& config, double alpha);

/// Outcome of one command: exit code, files written, lines for stdout.
struct RunResult {
    int exit_code = kExitOk;
    std::vector<std::string> files;
    std::vector<std::string> lines;
};

RunResult run_fig1(const ExperimentConfig& config);
RunResult run_fig2(const ExperimentConfig& config);
RunResult run_ratios(const ExperimentConfig& config);
RunResult run_mse_validate(const ExperimentConfig& config);

struct SelftestOptions {
    QFunction q = &q_function;  // fault-injection hook for the F_q(0) check
};

struct SelftestCheck {
    std::string name;
    double measured = 0.0;
    double expected = 0.0;
    double tolerance = 0.0;
    bool relative = false;
    bool pass = false;
};

std::vector<SelftestCheck> selftest_checks(const SelftestOptions& options = {});
/// Exit code is the number of failed checks, capped at 125.
RunResult run_selftest(const ExperimentConfig& config, const SelftestOptions& options = {});

struct ValidationCheck {
    std::string name;
    std::string channel;
    std::string estimator;
    std::string stage;
    double value = 0.0;
    double reference = 0.0;
    double se = 0.0;
    double threshold = 0.0;  // in standard errors, or relative tolerance
    std::string status;      // PASS, FAIL or SKIPPED
};

struct MseValidation {
    MseReport kalman;
    MseReport grid;
    std::vector<ValidationCheck> checks;
    int failures = 0;
};

/// Monte Carlo validation at (alpha[0], snr_db) for both channels.
MseValidation mse_validate(const ExperimentConfig& config);

/// Re-reads a sweep data file and returns the problems found (empty if fine):
/// header present, numeric cells, finite values and strictly increasing SNR.
std::vector<std::string> validate_sweep_file(const std::string& path,
                                             const std::string& expected_hash);

/// Dispatches on config.experiment.
RunResult run_experiment(const ExperimentConfig& config);

}  // namespace bitsmooth::cli
