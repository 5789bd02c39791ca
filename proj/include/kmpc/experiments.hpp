#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "kmpc/arx.hpp"
#include "kmpc/config.hpp"
#include "kmpc/csv.hpp"
#include "kmpc/mpc.hpp"
#include "kmpc/noise.hpp"
#include "kmpc/plants.hpp"
#include "kmpc/prediction.hpp"
#include "kmpc/regression.hpp"
#include "kmpc/serialize.hpp"
#include "kmpc/signals.hpp"

namespace kmpc {

namespace fs = std::filesystem;

namespace detail {

inline void echo_config(const RunConfig& cfg, const fs::path& out) {
    fs::create_directories(out);
    save_json((out / "config_echo.json").string(), to_json(cfg));
}

inline fs::path resolve_data_dir(const RunConfig& cfg, const fs::path& out) {
    return cfg.data_dir.empty() ? out / "trials" : fs::path(cfg.data_dir);
}

inline fs::path resolve_model_dir(const RunConfig& cfg, const fs::path& out) {
    return cfg.model_dir.empty() ? out : fs::path(cfg.model_dir);
}

inline Rng derived_rng(std::uint64_t seed, std::uint64_t stream) {
    return Rng(seed ^ (0x9e3779b97f4a7c15ull * (stream + 1)));
}

}  // namespace detail

inline std::vector<Trial> read_trials_dir(const fs::path& dir) {
    if (!fs::is_directory(dir)) {
        throw std::runtime_error("read_trials_dir: '" + dir.string() + "' is not a directory");
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".csv") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        throw std::runtime_error("read_trials_dir: no .csv trials in '" + dir.string() + "'");
    }
    std::vector<Trial> trials;
    for (const fs::path& f : files) trials.push_back(read_trial(f.string(), f.stem().string()));
    return trials;
}

/// `collect`: simulates the configured plant under the configured excitation
/// and writes one CSV per trial. Ramp trials vary the transition period over
/// [transition_min, transition_max]; sinusoid trials cover each period in the
/// list.
inline void cmd_collect(const RunConfig& cfg, const fs::path& out) {
    detail::echo_config(cfg, out);
    const fs::path dir = detail::resolve_data_dir(cfg, out);
    fs::create_directories(dir);
    const PlantSpec plant = make_plant(cfg.plant);
    const double T_s = cfg.collect.sample_period;
    Rng rng(cfg.seed);

    if (cfg.signal.kind == "random-ramp") {
        for (int i = 0; i < cfg.collect.trials; ++i) {
            const double span = cfg.signal.transition_max - cfg.signal.transition_min;
            const double T_u = cfg.collect.trials > 1
                                   ? cfg.signal.transition_min +
                                         span * static_cast<double>(i) /
                                             static_cast<double>(cfg.collect.trials - 1)
                                   : cfg.signal.transition_min;
            const Index needed =
                static_cast<Index>(std::ceil(cfg.collect.duration / T_u)) + 2;
            const Index length = std::max(cfg.signal.table_length, needed);
            const Mat table = make_ramp_table(plant.input_dim, length, rng);
            char name[32];
            std::snprintf(name, sizeof(name), "trial_%03d", i);
            Trial trial = simulate_trial(
                plant, [&](double t, Index) { return ramp_inputs(table, T_u, t); },
                cfg.collect.duration, T_s, rng, name);
            write_trial((dir / (std::string(name) + ".csv")).string(), trial,
                        {"seed=" + std::to_string(cfg.seed), "signal=random-ramp",
                         "T_u=" + detail::format_double(T_u)});
        }
    } else if (cfg.signal.kind == "sinusoid-set") {
        int i = 0;
        for (const double T : cfg.signal.periods) {
            const double duration = static_cast<double>(cfg.signal.periods_per_trial) * T;
            char name[32];
            std::snprintf(name, sizeof(name), "sin_%02d_T%g", i, T);
            Trial trial = simulate_trial(
                plant, [&](double, Index k) { return sinusoid_inputs(T, T_s, k); }, duration, T_s,
                rng, name);
            write_trial((dir / (std::string(name) + ".csv")).string(), trial,
                        {"seed=" + std::to_string(cfg.seed), "signal=sinusoid-set",
                         "T=" + detail::format_double(T)});
            ++i;
        }
    } else {
        throw std::invalid_argument("cmd_collect: unknown signal kind '" + cfg.signal.kind + "'");
    }
}

/// `noise`: stochasticity characterization under sinusoid excitation.
inline void cmd_noise(const RunConfig& cfg, const fs::path& out) {
    detail::echo_config(cfg, out);
    const PlantSpec plant = make_plant(cfg.plant);
    Rng rng(cfg.seed);
    const NoiseReport report =
        characterize_noise(plant, cfg.noise.periods, cfg.noise.periods_per_T,
                           cfg.collect.sample_period, rng, cfg.noise.skip_periods);

    write_csv((out / "noise_report.csv").string(), {"deviation"},
              Mat(report.deviations), {"seed=" + std::to_string(cfg.seed)});

    Index rows = 0;
    for (const Mat& mean : report.mean_trajectories) rows += mean.rows();
    const int n = plant.output_dim();
    Mat mean_rows(rows, 2 + n);
    Index at = 0;
    for (std::size_t i = 0; i < report.mean_trajectories.size(); ++i) {
        const Mat& mean = report.mean_trajectories[i];
        for (Index k = 0; k < mean.rows(); ++k) {
            mean_rows(at, 0) = report.periods[i];
            mean_rows(at, 1) = static_cast<double>(k) * cfg.collect.sample_period;
            mean_rows.block(at, 2, 1, n) = mean.row(k);
            ++at;
        }
    }
    std::vector<std::string> header{"T", "t"};
    for (int i = 1; i <= n; ++i) header.push_back("y" + std::to_string(i));
    write_csv((out / "noise_mean_trajectories.csv").string(), header, mean_rows,
              {"seed=" + std::to_string(cfg.seed)});

    json summary;
    summary["spread_mean"] = report.spread_mean;
    summary["spread_std"] = report.spread_std;
    summary["max_deviation"] = report.max_deviation;
    summary["fraction_within_two_std"] = report.fraction_within_two_std;
    summary["periods"] = report.periods;
    summary["periods_per_T"] = cfg.noise.periods_per_T;
    save_json((out / "noise_summary.json").string(), summary);
}

/// `identify`: fits the Koopman model over the lambda grid and the ARX
/// baseline from the same trials; writes both models and the lambda report.
inline void cmd_identify(const RunConfig& cfg, const fs::path& out) {
    detail::echo_config(cfg, out);
    const fs::path data_dir = detail::resolve_data_dir(cfg, out);
    const std::vector<Trial> trials = read_trials_dir(data_dir);

    IdentifyConfig id;
    id.max_degree = cfg.max_degree;
    id.delays.state_dim = static_cast<int>(trials[0].states.cols());
    id.delays.input_dim = static_cast<int>(trials[0].inputs.cols());
    id.delays.state_delays = cfg.state_delays;
    id.delays.input_delays = cfg.input_delays;
    id.delays.sample_period =
        trials[0].samples() > 1 ? trials[0].time[1] - trials[0].time[0] : cfg.collect.sample_period;
    id.lambda_grid = cfg.resolved_lambda_grid();
    id.lasso_tol = cfg.lasso_tol;
    id.lasso_max_iter = cfg.lasso_max_iter;
    id.pinv_tolerance = cfg.pinv_tolerance;
    id.holdout_fraction = cfg.holdout_fraction;
    id.holdout_selection = cfg.holdout_selection;
    id.eval_horizon = cfg.eval_horizon;
    id.eval_stride = cfg.eval_stride;
    id.column_scaling = cfg.column_scaling;

    const IdentifyResult result = identify(id, trials);
    save_json((out / "koopman_model.json").string(), to_json(result.model));

    Mat report(static_cast<Index>(result.report.size()), 4);
    for (std::size_t i = 0; i < result.report.size(); ++i) {
        const LambdaReportRow& row = result.report[i];
        report(static_cast<Index>(i), 0) = row.lambda;
        report(static_cast<Index>(i), 1) = row.density;
        report(static_cast<Index>(i), 2) = row.normalized_error;
        report(static_cast<Index>(i), 3) = row.converged ? 1.0 : 0.0;
    }
    write_csv((out / "lambda_report.csv").string(),
              {"lambda", "density", "normalized_error", "converged"}, report,
              {"seed=" + std::to_string(cfg.seed),
               "chosen_lambda=" + detail::format_double(result.model.lambda)});

    const LinearSSModel baseline =
        fit_arx(trials, cfg.baseline_output_lags, cfg.baseline_input_lags);
    save_json((out / "linear_model.json").string(), to_json(baseline));
}

/// `predict`: Table-I-style model comparison. Evaluates both persisted
/// models on every trial in the data directory over the configured horizon.
/// Rows are (model_id, trial_id); trial_id -1 carries the per-model average.
/// Comments map the ids to names.
inline void cmd_predict(const RunConfig& cfg, const fs::path& out) {
    detail::echo_config(cfg, out);
    const fs::path data_dir = detail::resolve_data_dir(cfg, out);
    const fs::path model_dir = detail::resolve_model_dir(cfg, out);
    const std::vector<Trial> trials = read_trials_dir(data_dir);
    const KoopmanModel koopman =
        koopman_from_json(load_json((model_dir / "koopman_model.json").string()));
    const LinearSSModel linear =
        linear_from_json(load_json((model_dir / "linear_model.json").string()));

    const double T_s = koopman.delays.sample_period;
    const int horizon = std::max(1, static_cast<int>(std::llround(cfg.predict_horizon_seconds / T_s)));

    std::vector<std::string> comments{"seed=" + std::to_string(cfg.seed),
                                      "horizon_steps=" + std::to_string(horizon),
                                      "model 0 = koopman", "model 1 = linear-ss"};
    Mat rows(2 * (static_cast<Index>(trials.size()) + 1), 4);
    Index at = 0;
    for (int model_id = 0; model_id < 2; ++model_id) {
        double total_mean = 0.0;
        double total_norm = 0.0;
        for (std::size_t t = 0; t < trials.size(); ++t) {
            if (model_id == 0) {
                comments.push_back("trial " + std::to_string(t) + " = " + trials[t].name);
            }
            const PredictionReport rep =
                model_id == 0
                    ? evaluate_prediction(koopman, trials[t], horizon, cfg.predict_stride)
                    : evaluate_prediction(linear, trials[t], horizon, cfg.predict_stride);
            rows.row(at++) << static_cast<double>(model_id), static_cast<double>(t),
                rep.mean_error, rep.normalized_error;
            total_mean += rep.mean_error;
            total_norm += rep.normalized_error;
        }
        rows.row(at++) << static_cast<double>(model_id), -1.0,
            total_mean / static_cast<double>(trials.size()),
            total_norm / static_cast<double>(trials.size());
    }
    write_csv((out / "prediction_table.csv").string(),
              {"model_id", "trial_id", "mean_error", "normalized_error"}, rows, comments);
}

/// `mpc`: runs every configured tracking task under both controllers against
/// the noisy plant; writes one closed-loop log per run, the Table-II-style
/// summary CSV, and a JSON summary.
inline void cmd_mpc(const RunConfig& cfg, const fs::path& out) {
    detail::echo_config(cfg, out);
    const fs::path model_dir = detail::resolve_model_dir(cfg, out);
    const PlantSpec plant = make_plant(cfg.plant);
    const KoopmanModel koopman =
        koopman_from_json(load_json((model_dir / "koopman_model.json").string()));
    const LinearSSModel linear =
        linear_from_json(load_json((model_dir / "linear_model.json").string()));

    ControllerConfig ctrl;
    ctrl.horizon = cfg.horizon;
    ctrl.terminal_weight = cfg.terminal_weight;
    ctrl.running_weight = cfg.running_weight;
    ctrl.input_reg = cfg.input_reg;
    ctrl.u_min = plant.u_min;
    ctrl.u_max = plant.u_max;
    ctrl.sample_period = cfg.collect.sample_period;
    ctrl.solver = cfg.solver;

    json summary;
    std::vector<std::string> comments{"seed=" + std::to_string(cfg.seed),
                                      "controller 0 = k-mpc", "controller 1 = l-mpc"};
    Mat table(static_cast<Index>(cfg.tasks.size()) * 2 + 2, 4);
    Index at = 0;
    std::vector<double> task_means[2];

    for (std::size_t ti = 0; ti < cfg.tasks.size(); ++ti) {
        const TaskConfig& tc = cfg.tasks[ti];
        const TrackingTask task = make_reference(shape_from_string(tc.shape), tc.scale,
                                                 tc.duration, cfg.collect.sample_period);
        comments.push_back("task " + std::to_string(ti) + " = " + tc.shape);
        for (int ci = 0; ci < 2; ++ci) {
            MpcController controller(
                ci == 0 ? prediction_view(koopman) : prediction_view(linear), ctrl);
            Rng rng = detail::derived_rng(cfg.seed, ti * 2 + static_cast<std::size_t>(ci));
            const ClosedLoopLog log = run_closed_loop(plant, controller, task, rng);

            const int n = plant.output_dim();
            const int m = plant.input_dim;
            Mat log_rows(log.ticks(), 1 + n + m + n + 3);
            log_rows.col(0) = log.time;
            log_rows.middleCols(1, n) = log.measured;
            log_rows.middleCols(1 + n, m) = log.inputs;
            log_rows.middleCols(1 + n + m, n) = log.reference;
            log_rows.col(1 + n + m + n) = log.error;
            for (Index k = 0; k < log.ticks(); ++k) {
                log_rows(k, 1 + n + m + n + 1) =
                    static_cast<double>(log.status[static_cast<std::size_t>(k)]);
            }
            log_rows.col(1 + n + m + n + 2) = log.solve_ms;
            std::vector<std::string> header{"t"};
            for (int i = 1; i <= n; ++i) header.push_back("x" + std::to_string(i));
            for (int i = 1; i <= m; ++i) header.push_back("u" + std::to_string(i));
            for (int i = 1; i <= n; ++i) header.push_back("r" + std::to_string(i));
            header.insert(header.end(), {"error", "status", "solve_ms"});
            const std::string log_name =
                "mpc_" + tc.shape + (ci == 0 ? "_kmpc" : "_lmpc") + ".csv";
            write_csv((out / log_name).string(), header, log_rows,
                      {"seed=" + std::to_string(cfg.seed), "task=" + tc.shape,
                       "controller=" + log.controller,
                       "diverged=" + std::string(log.diverged ? "1" : "0")});

            table.row(at++) << static_cast<double>(ti), static_cast<double>(ci), log.mean_error,
                log.std_error;
            task_means[ci].push_back(log.mean_error);
            summary[log.controller][tc.shape] = {{"mean_error", log.mean_error},
                                                 {"std_error", log.std_error},
                                                 {"diverged", log.diverged}};
        }
    }

    for (int ci = 0; ci < 2; ++ci) {
        double avg = 0.0;
        for (const double e : task_means[ci]) avg += e;
        avg /= static_cast<double>(task_means[ci].size());
        double var = 0.0;
        for (const double e : task_means[ci]) var += (e - avg) * (e - avg);
        const double sd = task_means[ci].size() > 1
                              ? std::sqrt(var / static_cast<double>(task_means[ci].size() - 1))
                              : 0.0;
        table.row(at++) << -1.0, static_cast<double>(ci), avg, sd;
        summary[ci == 0 ? "k-mpc" : "l-mpc"]["average"] = {{"mean_error", avg}, {"std_dev", sd}};
    }
    write_csv((out / "mpc_table.csv").string(),
              {"task_id", "controller_id", "mean_error", "std_error"}, table, comments);
    save_json((out / "mpc_summary.json").string(), summary);
}

}  // namespace kmpc
