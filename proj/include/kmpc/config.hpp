#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "kmpc/mpc.hpp"
#include "kmpc/plants.hpp"
#include "kmpc/qp.hpp"
#include "kmpc/regression.hpp"
#include "kmpc/serialize.hpp"

namespace kmpc {

struct PlantConfig {
    std::string kind = "arm-surrogate";  ///< or "exact-lifting"
    double noise_std = 0.005;
    double integrator_step = 0.01;
    ArmSurrogateParams arm;
    ExactLiftingParams exact;
};

inline PlantSpec make_plant(const PlantConfig& cfg) {
    PlantSpec plant;
    if (cfg.kind == "arm-surrogate") {
        ArmSurrogateParams params = cfg.arm;
        params.noise_std = cfg.noise_std;
        plant = arm_surrogate_plant(params);
    } else if (cfg.kind == "exact-lifting") {
        plant = exact_lifting_plant(cfg.exact, cfg.noise_std);
    } else {
        throw std::invalid_argument("make_plant: unknown plant kind '" + cfg.kind + "'");
    }
    plant.integrator_step = cfg.integrator_step;
    return plant;
}

struct SignalConfig {
    std::string kind = "random-ramp";  ///< or "sinusoid-set"
    double transition_min = 5.0;       ///< T_u range, varied across trials
    double transition_max = 10.0;
    Index table_length = 1000;
    std::vector<double> periods = {6, 7, 8, 9, 10, 11, 12};  ///< sinusoid periods
    int periods_per_trial = 3;  ///< sinusoid trials span this many periods each
};

struct CollectConfig {
    int trials = 8;
    double duration = 120.0;  ///< seconds per ramp trial
    double sample_period = 0.1;
};

struct TaskConfig {
    std::string shape = "pacman";
    double scale = 0.1;
    double duration = 90.0;
};

struct NoiseConfig {
    std::vector<double> periods = {6, 7, 8, 9, 10, 11, 12};
    int periods_per_T = 20;
    int skip_periods = 2;
};

struct RunConfig {
    std::uint64_t seed = 1;
    std::string data_dir;   ///< empty resolves to <out>/trials
    std::string model_dir;  ///< empty resolves to <out>

    PlantConfig plant;
    SignalConfig signal;
    CollectConfig collect;

    // identification
    int max_degree = 3;
    int state_delays = 1;
    int input_delays = 1;
    std::vector<double> lambda_grid;  ///< empty resolves to 0..50 step 1
    double lasso_tol = 1e-6;
    int lasso_max_iter = 10000;
    double pinv_tolerance = -1.0;
    double holdout_fraction = 0.1;
    bool holdout_selection = true;
    int eval_horizon = 25;
    int eval_stride = 5;
    bool column_scaling = false;

    int baseline_output_lags = 2;
    int baseline_input_lags = 2;

    // controller
    Index horizon = 25;
    double terminal_weight = 100.0;
    double running_weight = 0.1;
    double input_reg = 1e-6;
    QpSolverOptions solver;
    std::vector<TaskConfig> tasks = {{"pacman", 0.1, 90.0}, {"star", 0.1, 180.0},
                                     {"block-m", 0.1, 300.0}};

    double predict_horizon_seconds = 2.5;
    int predict_stride = 5;
    NoiseConfig noise;

    std::vector<double> resolved_lambda_grid() const {
        if (!lambda_grid.empty()) return lambda_grid;
        std::vector<double> grid;
        for (int l = 0; l <= 50; ++l) grid.push_back(static_cast<double>(l));
        return grid;
    }
};

inline json to_json(const RunConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["data_dir"] = cfg.data_dir;
    j["model_dir"] = cfg.model_dir;
    j["plant"] = {{"kind", cfg.plant.kind},
                  {"noise_std", cfg.plant.noise_std},
                  {"integrator_step", cfg.plant.integrator_step},
                  {"arm",
                   {{"stiffness", cfg.plant.arm.stiffness},
                    {"stiffening_radius", cfg.plant.arm.stiffening_radius},
                    {"damping", cfg.plant.arm.damping},
                    {"gain", cfg.plant.arm.gain},
                    {"input_scale", cfg.plant.arm.input_scale}}},
                  {"exact", {{"mu", cfg.plant.exact.mu}, {"kappa", cfg.plant.exact.kappa}}}};
    j["signal"] = {{"kind", cfg.signal.kind},
                   {"transition_min", cfg.signal.transition_min},
                   {"transition_max", cfg.signal.transition_max},
                   {"table_length", cfg.signal.table_length},
                   {"periods", cfg.signal.periods},
                   {"periods_per_trial", cfg.signal.periods_per_trial}};
    j["collect"] = {{"trials", cfg.collect.trials},
                    {"duration", cfg.collect.duration},
                    {"sample_period", cfg.collect.sample_period}};
    j["identify"] = {{"max_degree", cfg.max_degree},
                     {"state_delays", cfg.state_delays},
                     {"input_delays", cfg.input_delays},
                     {"lambda_grid", cfg.resolved_lambda_grid()},
                     {"lasso_tol", cfg.lasso_tol},
                     {"lasso_max_iter", cfg.lasso_max_iter},
                     {"pinv_tolerance", cfg.pinv_tolerance},
                     {"holdout_fraction", cfg.holdout_fraction},
                     {"holdout_selection", cfg.holdout_selection},
                     {"eval_horizon", cfg.eval_horizon},
                     {"eval_stride", cfg.eval_stride},
                     {"column_scaling", cfg.column_scaling}};
    j["baseline"] = {{"output_lags", cfg.baseline_output_lags},
                     {"input_lags", cfg.baseline_input_lags}};
    j["controller"] = {{"horizon", cfg.horizon},
                       {"terminal_weight", cfg.terminal_weight},
                       {"running_weight", cfg.running_weight},
                       {"input_reg", cfg.input_reg}};
    j["solver"] = {{"tol", cfg.solver.tol},          {"max_iter", cfg.solver.max_iter},
                   {"rho", cfg.solver.rho},          {"sigma", cfg.solver.sigma},
                   {"alpha", cfg.solver.alpha},      {"adaptive_rho", cfg.solver.adaptive_rho},
                   {"polish", cfg.solver.polish},    {"check_interval", cfg.solver.check_interval}};
    json tasks = json::array();
    for (const TaskConfig& t : cfg.tasks) {
        tasks.push_back({{"shape", t.shape}, {"scale", t.scale}, {"duration", t.duration}});
    }
    j["tasks"] = std::move(tasks);
    j["predict"] = {{"horizon_seconds", cfg.predict_horizon_seconds},
                    {"stride", cfg.predict_stride}};
    j["noise"] = {{"periods", cfg.noise.periods},
                  {"periods_per_T", cfg.noise.periods_per_T},
                  {"skip_periods", cfg.noise.skip_periods}};
    return j;
}

inline RunConfig config_from_json(const json& j) {
    RunConfig cfg;
    cfg.seed = j.value("seed", cfg.seed);
    cfg.data_dir = j.value("data_dir", cfg.data_dir);
    cfg.model_dir = j.value("model_dir", cfg.model_dir);
    if (j.contains("plant")) {
        const json& p = j.at("plant");
        cfg.plant.kind = p.value("kind", cfg.plant.kind);
        cfg.plant.noise_std = p.value("noise_std", cfg.plant.noise_std);
        cfg.plant.integrator_step = p.value("integrator_step", cfg.plant.integrator_step);
        if (p.contains("arm")) {
            const json& a = p.at("arm");
            cfg.plant.arm.stiffness = a.value("stiffness", cfg.plant.arm.stiffness);
            cfg.plant.arm.stiffening_radius =
                a.value("stiffening_radius", cfg.plant.arm.stiffening_radius);
            cfg.plant.arm.damping = a.value("damping", cfg.plant.arm.damping);
            cfg.plant.arm.gain = a.value("gain", cfg.plant.arm.gain);
            cfg.plant.arm.input_scale = a.value("input_scale", cfg.plant.arm.input_scale);
        }
        if (p.contains("exact")) {
            const json& e = p.at("exact");
            cfg.plant.exact.mu = e.value("mu", cfg.plant.exact.mu);
            cfg.plant.exact.kappa = e.value("kappa", cfg.plant.exact.kappa);
        }
    }
    if (j.contains("signal")) {
        const json& s = j.at("signal");
        cfg.signal.kind = s.value("kind", cfg.signal.kind);
        cfg.signal.transition_min = s.value("transition_min", cfg.signal.transition_min);
        cfg.signal.transition_max = s.value("transition_max", cfg.signal.transition_max);
        cfg.signal.table_length = s.value("table_length", cfg.signal.table_length);
        if (s.contains("periods")) cfg.signal.periods = s.at("periods").get<std::vector<double>>();
        cfg.signal.periods_per_trial = s.value("periods_per_trial", cfg.signal.periods_per_trial);
    }
    if (j.contains("collect")) {
        const json& c = j.at("collect");
        cfg.collect.trials = c.value("trials", cfg.collect.trials);
        cfg.collect.duration = c.value("duration", cfg.collect.duration);
        cfg.collect.sample_period = c.value("sample_period", cfg.collect.sample_period);
    }
    if (j.contains("identify")) {
        const json& i = j.at("identify");
        cfg.max_degree = i.value("max_degree", cfg.max_degree);
        cfg.state_delays = i.value("state_delays", cfg.state_delays);
        cfg.input_delays = i.value("input_delays", cfg.input_delays);
        if (i.contains("lambda_grid")) cfg.lambda_grid = i.at("lambda_grid").get<std::vector<double>>();
        cfg.lasso_tol = i.value("lasso_tol", cfg.lasso_tol);
        cfg.lasso_max_iter = i.value("lasso_max_iter", cfg.lasso_max_iter);
        cfg.pinv_tolerance = i.value("pinv_tolerance", cfg.pinv_tolerance);
        cfg.holdout_fraction = i.value("holdout_fraction", cfg.holdout_fraction);
        cfg.holdout_selection = i.value("holdout_selection", cfg.holdout_selection);
        cfg.eval_horizon = i.value("eval_horizon", cfg.eval_horizon);
        cfg.eval_stride = i.value("eval_stride", cfg.eval_stride);
        cfg.column_scaling = i.value("column_scaling", cfg.column_scaling);
    }
    if (j.contains("baseline")) {
        const json& b = j.at("baseline");
        cfg.baseline_output_lags = b.value("output_lags", cfg.baseline_output_lags);
        cfg.baseline_input_lags = b.value("input_lags", cfg.baseline_input_lags);
    }
    if (j.contains("controller")) {
        const json& c = j.at("controller");
        cfg.horizon = c.value("horizon", cfg.horizon);
        cfg.terminal_weight = c.value("terminal_weight", cfg.terminal_weight);
        cfg.running_weight = c.value("running_weight", cfg.running_weight);
        cfg.input_reg = c.value("input_reg", cfg.input_reg);
    }
    if (j.contains("solver")) {
        const json& s = j.at("solver");
        cfg.solver.tol = s.value("tol", cfg.solver.tol);
        cfg.solver.max_iter = s.value("max_iter", cfg.solver.max_iter);
        cfg.solver.rho = s.value("rho", cfg.solver.rho);
        cfg.solver.sigma = s.value("sigma", cfg.solver.sigma);
        cfg.solver.alpha = s.value("alpha", cfg.solver.alpha);
        cfg.solver.adaptive_rho = s.value("adaptive_rho", cfg.solver.adaptive_rho);
        cfg.solver.polish = s.value("polish", cfg.solver.polish);
        cfg.solver.check_interval = s.value("check_interval", cfg.solver.check_interval);
    }
    if (j.contains("tasks")) {
        cfg.tasks.clear();
        for (const json& t : j.at("tasks")) {
            TaskConfig task;
            task.shape = t.value("shape", task.shape);
            task.scale = t.value("scale", task.scale);
            task.duration = t.value("duration", task.duration);
            cfg.tasks.push_back(task);
        }
    }
    if (j.contains("predict")) {
        const json& p = j.at("predict");
        cfg.predict_horizon_seconds = p.value("horizon_seconds", cfg.predict_horizon_seconds);
        cfg.predict_stride = p.value("stride", cfg.predict_stride);
    }
    if (j.contains("noise")) {
        const json& n = j.at("noise");
        if (n.contains("periods")) cfg.noise.periods = n.at("periods").get<std::vector<double>>();
        cfg.noise.periods_per_T = n.value("periods_per_T", cfg.noise.periods_per_T);
        cfg.noise.skip_periods = n.value("skip_periods", cfg.noise.skip_periods);
    }
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    return config_from_json(load_json(path));
}

}  // namespace kmpc
