#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kmpc/arx.hpp"
#include "kmpc/model.hpp"
#include "kmpc/plants.hpp"
#include "kmpc/qp.hpp"
#include "kmpc/types.hpp"

namespace kmpc {

/// Uniformly sampled reference trajectory for one tracking task.
struct TrackingTask {
    std::string name;
    Mat reference;  ///< K x n
    double sample_period = 0.1;

    Index ticks() const { return reference.rows(); }
    double duration() const { return static_cast<double>(ticks()) * sample_period; }
};

struct ControllerConfig {
    Index horizon = 25;             ///< N_h, 2.5 s at 10 Hz
    double terminal_weight = 100.0; ///< on (y[N_h] - r[N_h])^2
    double running_weight = 0.1;    ///< on (y[i] - r[i])^2
    double input_reg = 1e-6;        ///< epsilon ridge on H_i; keeps the QP strictly convex
    Vec u_min;                      ///< input box, sized m
    Vec u_max;
    double sample_period = 0.1;
    QpSolverOptions solver;
};

/// Common prediction-model surface for the controller: lifted Koopman and
/// linear state-space models drive the same pipeline.
struct PredictionModel {
    std::string name;
    Mat A;
    Mat B;
    Mat C;
    Index min_history = 0;  ///< past samples required before the current one
    std::function<Vec(const Mat& states, const Mat& inputs, Index k)> init_state;

    int output_dim() const { return static_cast<int>(C.rows()); }
    int input_dim() const { return static_cast<int>(B.cols()); }
};

inline PredictionModel prediction_view(const KoopmanModel& model) {
    PredictionModel view;
    view.name = "k-mpc";
    view.A = model.A_hat;
    view.B = model.B_hat;
    view.C = model.C;
    view.min_history = model.delays.window();
    const MonomialBasis basis = model.basis;
    const DelaySpec delays = model.delays;
    view.init_state = [basis, delays](const Mat& states, const Mat& inputs, Index k) {
        return basis.lift(embed_at(states, inputs, k, delays));
    };
    return view;
}

inline PredictionModel prediction_view(const LinearSSModel& model) {
    PredictionModel view;
    view.name = "l-mpc";
    view.A = model.A_L;
    view.B = model.B_L;
    view.C = model.C_L;
    view.min_history = model.lag_window() - 1;
    const LinearSSModel copy = model;
    view.init_state = [copy](const Mat& states, const Mat& inputs, Index k) {
        return arx_initial_state(copy, states, inputs, k);
    };
    return view;
}

/// Output-tracking MPC program: G_i = w CtC with the running weight for
/// i < N_h and the terminal weight at N_h, g_i = -2 w Ct r[i],
/// H_i = eps I, and the input box in stacked polyhedral (E, F, b) form.
inline MpcProblemSpec build_tracking_problem(const PredictionModel& model,
                                             const ControllerConfig& config,
                                             const Mat& reference_window) {
    const Index N = model.A.rows();
    const Index m = model.B.cols();
    const Index Nh = config.horizon;
    if (reference_window.rows() != Nh + 1 || reference_window.cols() != model.C.rows()) {
        throw std::invalid_argument("build_tracking_problem: reference window must be (N_h+1) x n");
    }
    if (config.u_min.size() != m || config.u_max.size() != m) {
        throw std::invalid_argument("build_tracking_problem: input box must be sized m");
    }

    const Mat CtC = model.C.transpose() * model.C;
    MpcProblemSpec spec;
    spec.horizon = Nh;
    spec.A = model.A;
    spec.B = model.B;
    spec.G.resize(static_cast<std::size_t>(Nh + 1));
    spec.g.resize(static_cast<std::size_t>(Nh + 1));
    for (Index i = 0; i <= Nh; ++i) {
        const double w = i == Nh ? config.terminal_weight : config.running_weight;
        spec.G[static_cast<std::size_t>(i)] = w * CtC;
        spec.g[static_cast<std::size_t>(i)] =
            -2.0 * w * model.C.transpose() * reference_window.row(i).transpose();
    }
    Mat F(2 * m, m);
    F.topRows(m) = Mat::Identity(m, m);
    F.bottomRows(m) = -Mat::Identity(m, m);
    Vec bounds(2 * m);
    bounds.head(m) = config.u_max;
    bounds.tail(m) = -config.u_min;
    for (Index i = 0; i < Nh; ++i) {
        spec.H.push_back(config.input_reg * Mat::Identity(m, m));
        spec.h.push_back(Vec::Zero(m));
        spec.E.push_back(Mat::Zero(2 * m, N));
        spec.F.push_back(F);
        spec.b.push_back(bounds);
    }
    return spec;
}

/// Receding-horizon controller. The condensed structure is built once; each
/// tick updates the linear terms from the current reference window, lifts
/// the measured history, solves, and applies the first input. Warm starts
/// shift the previous solution by one stage.
class MpcController {
public:
    MpcController(PredictionModel model, ControllerConfig config)
        : model_(std::move(model)),
          config_(std::move(config)),
          condensed_(build_tracking_problem(
              model_, config_, Mat::Zero(config_.horizon + 1, model_.C.rows()))) {}

    struct StepResult {
        Vec u;
        QpStatus status = QpStatus::optimal;
        int iterations = 0;
        double solve_seconds = 0.0;
        double objective = 0.0;
    };

    const PredictionModel& model() const { return model_; }
    const ControllerConfig& config() const { return config_; }

    void reset() { warm_.reset(); }

    /// One controller tick. `k` indexes the current sample in the history
    /// matrices; the reference window holds rows r[k..k+N_h].
    StepResult step(const Mat& states, const Mat& inputs, Index k, const Mat& reference_window) {
        const auto t0 = std::chrono::steady_clock::now();
        const Index Nh = config_.horizon;
        const Index m = model_.B.cols();
        if (reference_window.rows() != Nh + 1) {
            throw std::invalid_argument("MpcController::step: reference window rows");
        }

        const Vec z0 = model_.init_state(states, inputs, k);
        std::vector<Vec> g(static_cast<std::size_t>(Nh + 1));
        for (Index i = 0; i <= Nh; ++i) {
            const double w = i == Nh ? config_.terminal_weight : config_.running_weight;
            g[static_cast<std::size_t>(i)] =
                -2.0 * w * model_.C.transpose() * reference_window.row(i).transpose();
        }
        const DenseQp qp = condensed_.instantiate(z0, &g);

        QpSolution sol = warm_.has_value() ? solve_qp(qp, config_.solver, &*warm_)
                                           : solve_qp(qp, config_.solver);

        // Shift the solution one stage for the next tick's warm start.
        QpWarmStart next;
        next.U = sol.U;
        if (Nh > 1) {
            next.U.head((Nh - 1) * m) = sol.U.tail((Nh - 1) * m);
            next.U.tail(m) = sol.U.tail(m);
        }
        next.dual = sol.dual;
        const Index c = 2 * m;  // box rows per stage
        if (Nh > 1 && sol.dual.size() == Nh * c) {
            next.dual.head((Nh - 1) * c) = sol.dual.tail((Nh - 1) * c);
            next.dual.tail(c) = sol.dual.tail(c);
        }
        warm_ = std::move(next);

        StepResult out;
        out.u = sol.U.head(m);
        out.status = sol.status;
        out.iterations = sol.iterations;
        out.objective = sol.objective;
        out.solve_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return out;
    }

private:
    PredictionModel model_;
    ControllerConfig config_;
    CondensedMpc condensed_;
    std::optional<QpWarmStart> warm_;
};

/// Closed-loop record: one entry per tick.
struct ClosedLoopLog {
    std::string task;
    std::string controller;
    Vec time;
    Mat measured;   ///< noisy plant outputs seen by the controller
    Mat inputs;     ///< applied inputs (inside the box exactly)
    Mat reference;
    Vec error;      ///< Euclidean distance to the reference per tick
    std::vector<int> status;  ///< QpStatus per tick
    Vec solve_ms;
    double mean_error = 0.0;
    double std_error = 0.0;
    bool diverged = false;
    Index ticks() const { return time.size(); }
};

/// Runs Algorithm-2-style closed-loop control against a simulated plant:
/// measure (noisy), lift, solve, apply the first input with zero-order hold.
/// History is bootstrapped by replicating the initial measurement with zero
/// inputs; the reference preview holds the final point past the task end.
/// Solver non-optimal ticks are logged and the loop continues; plant
/// divergence truncates the log.
inline ClosedLoopLog run_closed_loop(const PlantSpec& plant, MpcController& controller,
                                     const TrackingTask& task, Rng& rng) {
    plant.validate();
    const Index K = task.ticks();
    if (K < 1) throw std::invalid_argument("run_closed_loop: empty task");
    const Index Nh = controller.config().horizon;
    const Index w = std::max<Index>(controller.model().min_history, 1);
    const int n = plant.output_dim();
    const int m = plant.input_dim;
    const double T_s = task.sample_period;
    controller.reset();

    Mat states(K + w, n);
    Mat inputs = Mat::Zero(K + w, m);

    ClosedLoopLog log;
    log.task = task.name;
    log.controller = controller.model().name;
    log.time.resize(K);
    log.measured.resize(K, n);
    log.inputs.resize(K, m);
    log.reference = task.reference;
    log.error.resize(K);
    log.status.resize(static_cast<std::size_t>(K), 0);
    log.solve_ms.resize(K);

    Vec x = plant.x0;
    Vec y = plant.measure_noisy(x, rng);
    for (Index i = 0; i < w; ++i) states.row(i) = y.transpose();  // bootstrap

    Index done = 0;
    for (Index k = 0; k < K; ++k) {
        states.row(w + k) = y.transpose();  // current measurement
        Mat r_window(Nh + 1, n);
        for (Index i = 0; i <= Nh; ++i) {
            const Index idx = std::min(k + i, K - 1);  // hold the final point
            r_window.row(i) = task.reference.row(idx);
        }

        MpcController::StepResult res = controller.step(states, inputs, w + k, r_window);
        const Vec u = res.u.cwiseMax(controller.config().u_min).cwiseMin(controller.config().u_max);
        inputs.row(w + k) = u.transpose();

        log.time[k] = static_cast<double>(k) * T_s;
        log.measured.row(k) = y.transpose();
        log.inputs.row(k) = u.transpose();
        log.error[k] = (y.transpose() - task.reference.row(k)).norm();
        log.status[static_cast<std::size_t>(k)] = static_cast<int>(res.status);
        log.solve_ms[k] = res.solve_seconds * 1e3;
        done = k + 1;

        if (k + 1 < K) {
            try {
                kmpc::StepResult plant_step = step(plant, x, u, T_s, rng);
                x = std::move(plant_step.next_state);
                y = std::move(plant_step.measurement);
            } catch (const std::runtime_error&) {
                log.diverged = true;
                break;
            }
        }
    }

    if (done < K) {
        log.time.conservativeResize(done);
        log.measured.conservativeResize(done, n);
        log.inputs.conservativeResize(done, m);
        log.reference.conservativeResize(done, n);
        log.error.conservativeResize(done);
        log.status.resize(static_cast<std::size_t>(done));
        log.solve_ms.conservativeResize(done);
    }
    log.mean_error = log.error.size() > 0 ? log.error.mean() : 0.0;
    double var = 0.0;
    for (Index i = 0; i < log.error.size(); ++i) {
        var += (log.error[i] - log.mean_error) * (log.error[i] - log.mean_error);
    }
    log.std_error = log.error.size() > 1
                        ? std::sqrt(var / static_cast<double>(log.error.size() - 1))
                        : 0.0;
    return log;
}

enum class RefShape { circle, pacman, star, block_m, setpoint };

inline RefShape shape_from_string(const std::string& s) {
    if (s == "circle") return RefShape::circle;
    if (s == "pacman") return RefShape::pacman;
    if (s == "star") return RefShape::star;
    if (s == "block-m" || s == "block_m") return RefShape::block_m;
    if (s == "setpoint") return RefShape::setpoint;
    throw std::invalid_argument("unknown reference shape: " + s);
}

inline std::string to_string(RefShape s) {
    switch (s) {
        case RefShape::circle: return "circle";
        case RefShape::pacman: return "pacman";
        case RefShape::star: return "star";
        case RefShape::block_m: return "block-m";
        case RefShape::setpoint: return "setpoint";
    }
    return "unknown";
}

namespace detail {

struct PathPiece {
    bool is_arc = false;
    Eigen::Vector2d a = Eigen::Vector2d::Zero();
    Eigen::Vector2d b = Eigen::Vector2d::Zero();
    Eigen::Vector2d center = Eigen::Vector2d::Zero();
    double radius = 0.0;
    double ang0 = 0.0;
    double ang1 = 0.0;
    double length = 0.0;

    Eigen::Vector2d point_at(double s) const {
        const double f = length > 0.0 ? s / length : 0.0;
        if (is_arc) {
            const double ang = ang0 + f * (ang1 - ang0);
            return center + radius * Eigen::Vector2d(std::cos(ang), std::sin(ang));
        }
        return a + f * (b - a);
    }
};

inline PathPiece line_piece(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    PathPiece p;
    p.a = a;
    p.b = b;
    p.length = (b - a).norm();
    return p;
}

inline PathPiece arc_piece(const Eigen::Vector2d& center, double radius, double ang0, double ang1) {
    PathPiece p;
    p.is_arc = true;
    p.center = center;
    p.radius = radius;
    p.ang0 = ang0;
    p.ang1 = ang1;
    p.length = std::abs(ang1 - ang0) * radius;
    return p;
}

inline Eigen::Vector2d path_point(const std::vector<PathPiece>& pieces, double s) {
    for (const PathPiece& p : pieces) {
        if (s <= p.length) return p.point_at(s);
        s -= p.length;
    }
    return pieces.back().point_at(pieces.back().length);
}

inline std::vector<PathPiece> shape_path(RefShape shape, double scale) {
    std::vector<PathPiece> pieces;
    const double deg = M_PI / 180.0;
    switch (shape) {
        case RefShape::circle: {
            pieces.push_back(arc_piece({0.0, 0.0}, scale, 0.0, 2.0 * M_PI));
            break;
        }
        case RefShape::pacman: {
            const double mouth = 30.0 * deg;  // half-angle of the mouth
            const Eigen::Vector2d open{scale * std::cos(mouth), scale * std::sin(mouth)};
            const Eigen::Vector2d close{scale * std::cos(-mouth), scale * std::sin(-mouth)};
            pieces.push_back(arc_piece({0.0, 0.0}, scale, mouth, 2.0 * M_PI - mouth));
            pieces.push_back(line_piece(close, {0.0, 0.0}));
            pieces.push_back(line_piece({0.0, 0.0}, open));
            break;
        }
        case RefShape::star: {
            const double inner = 0.45 * scale;
            std::vector<Eigen::Vector2d> verts;
            for (int k = 0; k < 5; ++k) {
                const double ao = M_PI / 2.0 + 2.0 * M_PI * k / 5.0;
                const double ai = ao + M_PI / 5.0;
                verts.emplace_back(scale * std::cos(ao), scale * std::sin(ao));
                verts.emplace_back(inner * std::cos(ai), inner * std::sin(ai));
            }
            for (std::size_t k = 0; k < verts.size(); ++k) {
                pieces.push_back(line_piece(verts[k], verts[(k + 1) % verts.size()]));
            }
            break;
        }
        case RefShape::block_m: {
            const std::vector<std::pair<double, double>> raw = {
                {-0.8, -0.8}, {-0.8, 0.8},  {-0.45, 0.8}, {0.0, 0.15},
                {0.45, 0.8},  {0.8, 0.8},   {0.8, -0.8},  {0.45, -0.8},
                {0.45, 0.35}, {0.0, -0.3},  {-0.45, 0.35}, {-0.45, -0.8}};
            std::vector<Eigen::Vector2d> verts;
            for (const auto& [vx, vy] : raw) verts.emplace_back(scale * vx, scale * vy);
            for (std::size_t k = 0; k < verts.size(); ++k) {
                pieces.push_back(line_piece(verts[k], verts[(k + 1) % verts.size()]));
            }
            break;
        }
        case RefShape::setpoint: {
            pieces.push_back(line_piece({scale, 0.0}, {scale, 0.0}));
            break;
        }
    }
    return pieces;
}

}  // namespace detail

/// Builds a closed reference path traversed at constant speed over the
/// duration, uniformly sampled at T_s; the first sample is the path point
/// nearest the origin and the last sample closes the loop exactly.
inline TrackingTask make_reference(RefShape shape, double scale, double duration, double T_s) {
    if (!(duration > 0.0) || !(T_s > 0.0)) {
        throw std::invalid_argument("make_reference: duration and T_s must be > 0");
    }
    const Index K = static_cast<Index>(std::llround(duration / T_s));
    if (K < 2) throw std::invalid_argument("make_reference: fewer than two samples");

    TrackingTask task;
    task.name = to_string(shape);
    task.sample_period = T_s;
    task.reference.resize(K, 2);

    const auto pieces = detail::shape_path(shape, scale);
    double perimeter = 0.0;
    for (const auto& p : pieces) perimeter += p.length;
    if (perimeter <= 0.0) {
        // Degenerate (setpoint): constant reference.
        const Eigen::Vector2d pt = pieces.front().a;
        for (Index k = 0; k < K; ++k) task.reference.row(k) = pt.transpose();
        return task;
    }

    // Start at the path point nearest the origin (first argmin on a fine scan).
    const int scan = 20000;
    double best_s = 0.0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < scan; ++i) {
        const double s = perimeter * static_cast<double>(i) / static_cast<double>(scan);
        const double d = detail::path_point(pieces, s).norm();
        if (d < best_d - 1e-15) {
            best_d = d;
            best_s = s;
        }
    }

    for (Index k = 0; k < K; ++k) {
        double s = best_s + perimeter * static_cast<double>(k) / static_cast<double>(K - 1);
        s = std::fmod(s, perimeter);
        task.reference.row(k) = detail::path_point(pieces, s).transpose();
    }
    return task;
}

}  // namespace kmpc
