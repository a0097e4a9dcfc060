#include "bitsmooth/cli/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <numbers>

#include "bitsmooth/bim.hpp"
#include "bitsmooth/cli/data_file.hpp"
#include "bitsmooth/errors.hpp"
#include "bitsmooth/parallel.hpp"
#include "bitsmooth/steady.hpp"

namespace bitsmooth::cli {
namespace {

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

std::string alpha_tag(double alpha) { return fmt("%.9g", alpha); }

double rel_error(double measured, double expected) {
    return std::abs(measured - expected) / std::max(std::abs(expected), 1e-300);
}

void require(const ExperimentConfig& config, std::string_view experiment) {
    if (config.experiment != experiment)
        throw ConfigError("config is for '" + config.experiment + "', expected '" +
                          std::string(experiment) + "'");
    config.validate();
}

// Writes the table, then re-reads and checks it; problems become exit 3.
void emit(RunResult& result, const std::string& path, const std::string& hash,
          const DataTable& table) {
    write_data_file(path, hash, table);
    result.files.push_back(path);
    const auto problems = validate_sweep_file(path, hash);
    for (const auto& p : problems) result.lines.push_back("validation: " + p);
    if (!problems.empty()) result.exit_code = kExitValidation;
    else result.lines.push_back("wrote " + path + " (" + std::to_string(table.rows.size()) +
                                " rows)");
}

}  // namespace

std::vector<SweepRow> sweep(const ExperimentConfig& config, double alpha) {
    const auto points = config.snr.points();
    std::vector<SweepRow> rows(points.size());
    parallel_for(points.size(), config.threads, [&](std::size_t i) {
        const double snr = points[i];
        SteadyStateReport r;
        try {
            r = performance_ratios(config.model(alpha, snr), config.quadrature);
        } catch (const ConvergenceError& e) {
            throw SweepError("no convergence at alpha=" + alpha_tag(alpha) + ", snr=" +
                                 fmt("%g", snr) + " dB: " + e.what(),
                             alpha, snr);
        }
        if (!r.converged)
            throw SweepError("no convergence at alpha=" + alpha_tag(alpha) + ", snr=" +
                                 fmt("%g", snr) + " dB",
                             alpha, snr);
        rows[i] = {snr,           r.rho_sl_db,   r.rho_f_db,     r.rho_s_db, r.j_filter_unq,
                   r.j_filter_q,  r.j_smooth_unq, r.j_smooth_q,  true};
    });
    return rows;
}

RunResult run_fig1(const ExperimentConfig& config) {
    require(config, "fig1");
    const auto rows = sweep(config, config.alpha.front());
    DataTable table;
    table.columns = {"snr_db", "rho_sl_db"};
    table.units = {"dB", "dB"};
    for (const auto& r : rows) table.add_row({r.snr_db, r.rho_sl_db});
    RunResult result;
    emit(result, config.out, config_hash(config), table);
    return result;
}

RunResult run_fig2(const ExperimentConfig& config) {
    require(config, "fig2");
    const std::string hash = config_hash(config);
    const std::filesystem::path dir(config.out);
    RunResult result;
    for (double alpha : config.alpha) {
        const auto rows = sweep(config, alpha);
        DataTable smooth, filter;
        smooth.columns = {"snr_db", "rho_s_db"};
        filter.columns = {"snr_db", "rho_f_db"};
        smooth.units = filter.units = {"dB", "dB"};
        for (const auto& r : rows) {
            smooth.add_row({r.snr_db, r.rho_s_db});
            filter.add_row({r.snr_db, r.rho_f_db});
        }
        emit(result, (dir / ("smoothing" + alpha_tag(alpha) + ".txt")).string(), hash, smooth);
        emit(result, (dir / ("filtering" + alpha_tag(alpha) + ".txt")).string(), hash, filter);
    }
    return result;
}

RunResult run_ratios(const ExperimentConfig& config) {
    require(config, "ratios");
    DataTable table;
    table.columns = {"alpha",        "snr_db",     "rho_sl_db",    "rho_f_db",
                     "rho_s_db",     "j_filter_unq", "j_filter_q", "j_smooth_unq",
                     "j_smooth_q",   "converged"};
    table.units = {"-", "dB", "dB", "dB", "dB", "1/var", "1/var", "1/var", "1/var", "-"};
    for (double alpha : config.alpha)
        for (const auto& r : sweep(config, alpha))
            table.add_row({alpha, r.snr_db, r.rho_sl_db, r.rho_f_db, r.rho_s_db, r.j_filter_unq,
                           r.j_filter_q, r.j_smooth_unq, r.j_smooth_q, r.converged ? 1.0 : 0.0});
    RunResult result;
    emit(result, config.out, config_hash(config), table);
    return result;
}

std::vector<std::string> validate_sweep_file(const std::string& path,
                                             const std::string& expected_hash) {
    std::vector<std::string> problems;
    DataFile file;
    try {
        file = read_data_file(path);
    } catch (const std::exception& e) {
        return {e.what()};
    }
    if (file.config_hash != expected_hash)
        problems.push_back(path + ": config hash " + file.config_hash + " != " + expected_hash);
    std::size_t snr_col = 0;
    try {
        snr_col = file.column("snr_db");
    } catch (const std::exception&) {
        problems.push_back(path + ": no snr_db column");
        return problems;
    }
    const auto& cols = file.table.columns;
    const bool grouped = std::find(cols.begin(), cols.end(), "alpha") != cols.end();
    const std::size_t alpha_col = grouped ? file.column("alpha") : 0;
    if (file.table.rows.empty()) problems.push_back(path + ": no rows");
    for (std::size_t r = 0; r < file.table.rows.size(); ++r) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            double v = 0.0;
            try {
                v = file.number(r, c);
            } catch (const std::exception& e) {
                problems.push_back(path + ": row " + std::to_string(r + 1) + ": " + e.what());
                continue;
            }
            if (!std::isfinite(v))
                problems.push_back(path + ": row " + std::to_string(r + 1) + ", column " +
                                   cols[c] + " is not finite");
        }
        if (r == 0) continue;
        try {
            const bool same_group =
                !grouped || file.number(r, alpha_col) == file.number(r - 1, alpha_col);
            if (same_group && !(file.number(r, snr_col) > file.number(r - 1, snr_col)))
                problems.push_back(path + ": snr_db not strictly increasing at row " +
                                   std::to_string(r + 1));
        } catch (const std::exception&) {
            // already reported above
        }
    }
    return problems;
}

// -- mse-validate --------------------------------------------------------------

namespace {

const char* channel_name(MeasurementChannel c) {
    return c == MeasurementChannel::Unquantized ? "unquantized" : "one-bit";
}

const char* estimator_name(EstimatorKind e) { return e == EstimatorKind::Kalman ? "kalman" : "grid"; }

ValidationCheck make_check(const std::string& name, const MseReport& report,
                           const std::string& stage) {
    ValidationCheck c;
    c.name = name;
    c.channel = channel_name(report.channel);
    c.estimator = estimator_name(report.estimator);
    c.stage = stage;
    return c;
}

// Two-sided (tightness) or one-sided (bound validity) comparison in SE units.
ValidationCheck window_check(const std::string& name, const MseReport& report,
                             const std::string& stage, const WindowStat& w, double reference,
                             bool two_sided) {
    ValidationCheck c = make_check(name, report, stage);
    c.value = w.mse;
    c.reference = reference;
    c.se = w.se;
    c.threshold = 3.0;
    if (!report.se_defined) {
        c.status = "SKIPPED";
        return c;
    }
    const bool ok = two_sided ? std::abs(w.mse - reference) < 3.0 * w.se
                              : w.mse >= reference - 3.0 * w.se;
    c.status = ok ? "PASS" : "FAIL";
    return c;
}

// Worst per-block deviation, in SE units, under a family-wise threshold.
ValidationCheck block_check(const MseReport& report, const std::string& stage,
                            const std::vector<BlockStat>& blocks, bool two_sided) {
    ValidationCheck c = make_check(two_sided ? "per-block-tightness" : "per-block-validity",
                                   report, stage);
    std::vector<const BlockStat*> used;
    for (const auto& b : blocks)
        if (b.block >= report.burn_in) used.push_back(&b);
    c.threshold = used.empty() ? 3.0 : family_wise_z(used.size());
    if (!report.se_defined || used.empty()) {
        c.status = "SKIPPED";
        return c;
    }
    double worst = -std::numeric_limits<double>::infinity();
    for (const BlockStat* b : used) {
        const double z = two_sided ? std::abs(b->mse - b->bound) / b->se
                                   : (b->bound - b->mse) / b->se;
        if (z > worst) {
            worst = z;
            c.value = b->mse;
            c.reference = b->bound;
            c.se = b->se;
        }
    }
    c.status = worst < c.threshold ? "PASS" : "FAIL";
    return c;
}

// Smoothed MSE may not exceed the filtered MSE at the same block by more than
// 2 combined standard errors.
ValidationCheck dominance_check(const MseReport& report) {
    ValidationCheck c = make_check("smoothing-dominance", report, "smoother");
    c.threshold = 2.0;
    if (!report.se_defined || report.smoother.empty()) {
        c.status = "SKIPPED";
        return c;
    }
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& s : report.smoother) {
        if (s.block < 1 || s.block > static_cast<std::int64_t>(report.filter.size())) continue;
        const auto& f = report.filter[static_cast<std::size_t>(s.block - 1)];
        const double se = std::hypot(s.se, f.se);
        const double z = (s.mse - f.mse) / se;
        if (z > worst) {
            worst = z;
            c.value = s.mse;
            c.reference = f.mse;
            c.se = se;
        }
    }
    c.status = worst <= c.threshold ? "PASS" : "FAIL";
    return c;
}

ValidationCheck relative_check(const std::string& name, const std::string& stage, double value,
                               double reference, double tolerance) {
    ValidationCheck c;
    c.name = name;
    c.channel = "unquantized";
    c.estimator = "kalman";
    c.stage = stage;
    c.value = value;
    c.reference = reference;
    c.se = std::numeric_limits<double>::quiet_NaN();
    c.threshold = tolerance;
    c.status = rel_error(value, reference) <= tolerance ? "PASS" : "FAIL";
    return c;
}

// Steady RTS variance at a lag long enough for the backward pass to forget its
// start: the smoother contracts by g = alpha P / P_pred per block.
double long_lag_rts_variance(const GaussMarkovModel& model) {
    const double p = steady_kalman_variance(model);
    const double pred = model.alpha * model.alpha * p + model.sigma_z * model.sigma_z;
    const double g = std::abs(model.alpha) * p / pred;
    std::int64_t lag = 1000;
    if (g > 0.0 && g < 1.0)
        lag = std::max<std::int64_t>(lag, static_cast<std::int64_t>(std::ceil(std::log(1e-14) / std::log(g))));
    const auto full = kalman_variances(model, 2 * lag);
    // Only block `lag` is needed: hand rts_variances the window [lag, 2 lag].
    KalmanVariances window;
    window.predicted.assign(full.predicted.begin() + lag, full.predicted.end());
    window.filtered.assign(full.filtered.begin() + lag, full.filtered.end());
    return rts_variances(window, model, lag).front();
}

}  // namespace

MseValidation mse_validate(const ExperimentConfig& config) {
    require(config, "mse-validate");
    const double alpha = config.alpha.front();
    const GaussMarkovModel model = config.model(alpha, config.snr_db);

    MonteCarloConfig mc;
    mc.seed = config.mc.seed;
    mc.trials = config.mc.trials;
    mc.horizon = config.mc.horizon;
    mc.lag = config.mc.delta;
    mc.grid = config.grid();
    mc.quadrature = config.quadrature;
    mc.threads = config.threads;

    MseValidation v;
    v.kalman = monte_carlo_mse(model, MeasurementChannel::Unquantized, EstimatorKind::Kalman, mc);
    v.grid = monte_carlo_mse(model, MeasurementChannel::OneBit, EstimatorKind::Grid, mc);

    const auto& k = v.kalman;
    const auto& g = v.grid;
    v.checks.push_back(window_check("steady-tightness", k, "filter", k.steady_filter,
                                    k.steady_filter.bound_steady, true));
    v.checks.push_back(window_check("steady-tightness", k, "smoother", k.steady_smoother,
                                    k.steady_smoother.bound_matched, true));
    v.checks.push_back(relative_check("riccati-equals-bim", "filter", steady_kalman_variance(model),
                                      k.steady_filter.bound_steady, 1e-9));
    v.checks.push_back(relative_check("rts-equals-bim", "smoother", long_lag_rts_variance(model),
                                      k.steady_smoother.bound_steady, 1e-6));
    v.checks.push_back(window_check("steady-validity", g, "filter", g.steady_filter,
                                    g.steady_filter.bound_steady, false));
    v.checks.push_back(window_check("steady-validity", g, "smoother", g.steady_smoother,
                                    g.steady_smoother.bound_steady, false));
    v.checks.push_back(window_check("matched-validity", g, "smoother", g.steady_smoother,
                                    g.steady_smoother.bound_matched, false));
    v.checks.push_back(block_check(k, "filter", k.filter, true));
    v.checks.push_back(block_check(k, "smoother", k.smoother, true));
    v.checks.push_back(block_check(g, "filter", g.filter, false));
    v.checks.push_back(block_check(g, "smoother", g.smoother, false));
    v.checks.push_back(dominance_check(k));
    v.checks.push_back(dominance_check(g));
    for (const auto& c : v.checks)
        if (c.status == "FAIL") ++v.failures;
    return v;
}

RunResult run_mse_validate(const ExperimentConfig& config) {
    const MseValidation v = mse_validate(config);
    DataTable table;
    table.columns = {"check", "channel", "estimator", "stage", "value",
                     "reference", "se", "threshold", "status"};
    for (const auto& c : v.checks)
        table.rows.push_back({c.name, c.channel, c.estimator, c.stage, format_value(c.value),
                              format_value(c.reference), format_value(c.se),
                              format_value(c.threshold), c.status});
    RunResult result;
    if (!config.out.empty()) {
        write_data_file(config.out, config_hash(config), table);
        result.files.push_back(config.out);
        result.lines.push_back("wrote " + config.out);
    }
    for (const auto& row : table.rows) {
        std::string line;
        for (const auto& cell : row) line += (line.empty() ? "" : " ") + cell;
        result.lines.push_back(line);
    }
    result.lines.push_back(std::to_string(v.failures) + " failed of " +
                           std::to_string(v.checks.size()) + " checks");
    if (v.failures > 0) result.exit_code = kExitValidation;
    return result;
}

// -- selftest --------------------------------------------------------------------

std::vector<SelftestCheck> selftest_checks(const SelftestOptions& options) {
    std::vector<SelftestCheck> checks;
    auto add = [&](std::string name, double measured, double expected, double tol, bool relative) {
        const double err = relative ? rel_error(measured, expected) : std::abs(measured - expected);
        checks.push_back({std::move(name), measured, expected, tol, relative, err <= tol});
    };
    const double phi = std::numbers::phi;

    GaussMarkovModel walk;  // alpha = 1, sigma_z = sigma_eta = 1
    add("filter-bim-golden-ratio",
        steady_filter_bim(walk, MeasurementChannel::Unquantized).value, phi, 1e-9, false);
    add("smoothing-gain-golden-ratio",
        steady_smoothing_gain(walk, MeasurementChannel::Unquantized).value, phi - 1.0, 1e-9, false);

    for (auto [a, sz] : {std::pair{0.9, 1.0}, std::pair{0.5, 2.0}, std::pair{0.99, 0.1}}) {
        InfoMatrix anchor(1, 1);
        anchor(0, 0) = 5.0;
        const auto pred =
            predict_bim(anchor, transition_info(GaussMarkovModel{a, sz, 1.0, 0.0, 1.0}), 10000);
        add("prediction-limit alpha=" + fmt("%g", a) + " sigma_z=" + fmt("%g", sz),
            pred.values.back().info(0, 0), (1.0 - a * a) / (sz * sz), 1e-9, false);
    }

    for (double se : {0.1, 1.0, 10.0})
        add("fq-at-zero sigma_eta=" + fmt("%g", se), fq(0.0, se, options.q),
            2.0 / (std::numbers::pi * se * se), 1e-12, true);

    double worst = 0.0;
    for (double a : {0.5, 0.9, 0.99})
        for (double sz : {0.1, 1.0, 10.0})
            for (double se : {0.1, 1.0, 10.0})
                for (auto ch : {MeasurementChannel::Unquantized, MeasurementChannel::OneBit}) {
                    const GaussMarkovModel m{a, sz, se, 0.0, 1.0};
                    const auto d = transition_info(m);
                    const std::int64_t horizon = 30;
                    const auto full = filter_bim_sequence(m, ch, horizon);
                    const auto fims = expected_fim_sequence(m, ch, horizon);
                    for (std::int64_t k = 1; k <= horizon; ++k) {
                        BimSequence seq = full;
                        seq.anchor_block = k;
                        seq.values.resize(static_cast<std::size_t>(k) + 1);
                        for (std::int64_t l = 0; l < k; ++l) {
                            const double compact =
                                smooth_bim_compact(
                                    seq, smoothing_gain(d, std::span<const double>(fims), l, k))(0, 0);
                            const double backward = smooth_bim_backward(seq, d, l)(0, 0);
                            worst = std::max(worst, rel_error(compact, backward));
                        }
                    }
                }
    add("compact-equals-backward (27-point grid, max rel error)", worst, 0.0, 1e-10, false);
    return checks;
}

RunResult run_selftest(const ExperimentConfig& config, const SelftestOptions& options) {
    if (config.experiment != "selftest")
        throw ConfigError("config is for '" + config.experiment + "', expected 'selftest'");
    RunResult result;
    int failures = 0;
    for (const auto& c : selftest_checks(options)) {
        char buf[256];
        std::snprintf(buf, sizeof buf, "%s %s: measured %.17g expected %.17g tolerance %.3g (%s)",
                      c.pass ? "PASS" : "FAIL", c.name.c_str(), c.measured, c.expected,
                      c.tolerance, c.relative ? "relative" : "absolute");
        result.lines.emplace_back(buf);
        if (!c.pass) ++failures;
    }
    result.lines.push_back(std::to_string(failures) + " failed");
    result.exit_code = std::min(failures, 125);
    return result;
}

RunResult run_experiment(const ExperimentConfig& config) {
    const auto& e = config.experiment;
    if (e == "fig1") return run_fig1(config);
    if (e == "fig2") return run_fig2(config);
    if (e == "ratios") return run_ratios(config);
    if (e == "mse-validate") return run_mse_validate(config);
    if (e == "selftest") return run_selftest(config);
    throw ConfigError("unknown experiment '" + e + "'");
}

}  // namespace bitsmooth::cli
