#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "kmpc/mpc.hpp"
#include "kmpc/regression.hpp"
#include "../support/oracles.hpp"

using kmpc::ControllerConfig;
using kmpc::Mat;
using kmpc::MpcController;
using kmpc::PredictionModel;
using kmpc::RefShape;
using kmpc::Vec;

namespace {

Mat random_matrix(kmpc::Index rows, kmpc::Index cols, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Mat M(rows, cols);
    for (kmpc::Index i = 0; i < rows; ++i) {
        for (kmpc::Index j = 0; j < cols; ++j) M(i, j) = scale * gauss(rng);
    }
    return M;
}

/// Small stable synthetic lifted model with direct state feedback.
PredictionModel synthetic_model(kmpc::Index N, kmpc::Index m, int n, std::mt19937_64& rng) {
    PredictionModel model;
    model.name = "synthetic";
    Mat A = random_matrix(N, N, rng, 1.0);
    const double radius = std::abs(Eigen::EigenSolver<Mat>(A).eigenvalues().cwiseAbs().maxCoeff());
    A *= 0.9 / radius;
    model.A = A;
    model.B = random_matrix(N, m, rng, 0.5);
    model.C = Mat::Zero(n, N);
    model.C.leftCols(n).setIdentity();
    model.min_history = 1;
    model.init_state = [N](const Mat& states, const Mat&, kmpc::Index k) {
        Vec z = Vec::Zero(N);
        z.head(states.cols()) = states.row(k).transpose();
        return z;
    };
    return model;
}

ControllerConfig default_config(kmpc::Index m, kmpc::Index horizon = 5) {
    ControllerConfig cfg;
    cfg.horizon = horizon;
    cfg.u_min = Vec::Constant(m, 0.0);
    cfg.u_max = Vec::Constant(m, 10.0);
    return cfg;
}

}  // namespace

TEST_CASE("tracking problem carries the paper's weights") {
    std::mt19937_64 rng(71);
    PredictionModel model = synthetic_model(6, 2, 2, rng);
    ControllerConfig cfg = default_config(2, 4);
    const Mat r = Mat::Zero(5, 2);
    auto spec = kmpc::build_tracking_problem(model, cfg, r);

    const Mat CtC = model.C.transpose() * model.C;
    CHECK((spec.G.back() - 100.0 * CtC).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((spec.G.front() - 0.1 * CtC).cwiseAbs().maxCoeff() < 1e-14);
    // Zero reference kills the linear terms.
    for (const Vec& g : spec.g) CHECK(g.cwiseAbs().maxCoeff() == 0.0);
    for (const Vec& h : spec.h) CHECK(h.cwiseAbs().maxCoeff() == 0.0);
    // Box constraints in stacked polyhedral form.
    REQUIRE(spec.E.size() == 4);
    CHECK(spec.E[0].rows() == 4);
    CHECK(spec.F[0].topRows(2).isIdentity(0.0));
    CHECK(spec.b[0].head(2) == cfg.u_max);
}

TEST_CASE("reference equal to the free response makes zero input optimal") {
    std::mt19937_64 rng(72);
    PredictionModel model = synthetic_model(5, 2, 2, rng);
    ControllerConfig cfg = default_config(2, 6);
    cfg.u_min = Vec::Constant(2, -10.0);  // keep zero strictly inside the box

    // Free response of the model from a random initial state.
    Vec z = Vec::Zero(5);
    z.head(2) << 0.4, -0.2;
    Mat r(cfg.horizon + 1, 2);
    Vec zi = z;
    for (kmpc::Index i = 0; i <= cfg.horizon; ++i) {
        r.row(i) = (model.C * zi).transpose();
        zi = model.A * zi;
    }

    auto spec = kmpc::build_tracking_problem(model, cfg, r);
    const kmpc::DenseQp qp = kmpc::condense(spec, z);
    const auto sol = kmpc::solve_qp(qp);
    REQUIRE(sol.status == kmpc::QpStatus::optimal);
    CHECK(sol.U.cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("horizon-1 unconstrained step matches the closed-form optimizer") {
    std::mt19937_64 rng(73);
    for (int rep = 0; rep < 100; ++rep) {
        const kmpc::Index N = 3 + rep % 4;
        const kmpc::Index m = 1 + rep % 3;
        PredictionModel model = synthetic_model(N, m, 2, rng);
        ControllerConfig cfg = default_config(m, 1);
        cfg.input_reg = 1e-4;
        cfg.u_min = Vec::Constant(m, -1e6);  // effectively unconstrained
        cfg.u_max = Vec::Constant(m, 1e6);

        const Mat r = random_matrix(2, 2, rng, 0.3);
        auto spec = kmpc::build_tracking_problem(model, cfg, r);
        const Vec z0 = random_matrix(N, 1, rng, 0.5).col(0);
        const kmpc::DenseQp qp = kmpc::condense(spec, z0);
        const auto sol = kmpc::solve_qp(qp);
        REQUIRE(sol.status == kmpc::QpStatus::optimal);

        // u* = -(H + B' G B)^{-1} (B'(2 G A z0 + g) + h) / 2
        const Mat G = 100.0 * model.C.transpose() * model.C;
        const Vec g = -2.0 * 100.0 * model.C.transpose() * r.row(1).transpose();
        const Mat H = cfg.input_reg * Mat::Identity(m, m);
        const Vec rhs = model.B.transpose() * (2.0 * G * model.A * z0 + g);
        const Vec u_expected =
            -0.5 * (H + model.B.transpose() * G * model.B).ldlt().solve(rhs);
        CHECK((sol.U - u_expected).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("an unreachable reference saturates the input with an active bound") {
    std::mt19937_64 rng(74);
    PredictionModel model = synthetic_model(4, 1, 2, rng);
    model.B = Mat::Ones(4, 1) * 0.01;  // weak actuator
    ControllerConfig cfg = default_config(1, 1);
    const Mat r = Mat::Constant(2, 2, 50.0);  // far beyond reach in one step

    auto spec = kmpc::build_tracking_problem(model, cfg, r);
    const kmpc::DenseQp qp = kmpc::condense(spec, Vec::Zero(4));
    const auto sol = kmpc::solve_qp(qp);
    REQUIRE(sol.status == kmpc::QpStatus::optimal);
    const bool at_bound = std::abs(sol.U[0] - 10.0) < 1e-7 || std::abs(sol.U[0]) < 1e-7;
    CHECK(at_bound);
    CHECK(sol.dual.cwiseAbs().maxCoeff() > 1e-8);  // KKT multiplier certifies the bound
}

TEST_CASE("circle references sample the radius exactly") {
    const auto task = kmpc::make_reference(RefShape::circle, 0.15, 30.0, 0.1);
    REQUIRE(task.ticks() == 300);
    for (kmpc::Index k = 0; k < task.ticks(); ++k) {
        CHECK(task.reference.row(k).norm() == Catch::Approx(0.15).margin(1e-9));
    }
}

TEST_CASE("task durations map to sample counts at T_s") {
    const auto task = kmpc::make_reference(RefShape::pacman, 0.1, 90.0, 0.1);
    CHECK(task.ticks() == 900);
    CHECK(task.duration() == Catch::Approx(90.0));
}

TEST_CASE("closed shapes end where they start") {
    for (const RefShape shape : {RefShape::star, RefShape::pacman, RefShape::block_m}) {
        const auto task = kmpc::make_reference(shape, 0.1, 60.0, 0.1);
        const double gap = (task.reference.row(0) - task.reference.row(task.ticks() - 1)).norm();
        CHECK(gap < 1e-9);
    }
}

TEST_CASE("star tasks start at the path point nearest the origin") {
    const auto task = kmpc::make_reference(RefShape::star, 0.2, 60.0, 0.1);
    const double start = task.reference.row(0).norm();
    for (kmpc::Index k = 0; k < task.ticks(); ++k) {
        CHECK(start <= task.reference.row(k).norm() + 1e-6);
    }
}

TEST_CASE("steady state: receding horizon and open loop agree on a constant reference") {
    // Fully observed stable model (C = I): the controller's lifted state is
    // the plant state, so a free-response reference makes zero input the
    // exact optimum at every tick, and the receding-horizon trajectory
    // coincides with the open-loop one.
    std::mt19937_64 rng(75);
    PredictionModel model;
    model.name = "observed";
    Mat A(2, 2);
    A << 0.92, 0.05, -0.03, 0.88;
    model.A = A;
    model.B = random_matrix(2, 2, rng, 0.4);
    model.C = Mat::Identity(2, 2);
    model.min_history = 1;
    model.init_state = [](const Mat& states, const Mat&, kmpc::Index k) {
        return Vec(states.row(k).transpose());
    };

    ControllerConfig cfg = default_config(2, 8);
    cfg.u_min = Vec::Constant(2, -50.0);
    cfg.u_max = Vec::Constant(2, 50.0);

    Vec z0(2);
    z0 << 0.3, 0.1;
    const kmpc::Index T = 12;
    Mat free_resp(T + cfg.horizon + 1, 2);
    Vec zi = z0;
    for (kmpc::Index i = 0; i < free_resp.rows(); ++i) {
        free_resp.row(i) = zi.transpose();
        zi = model.A * zi;
    }

    MpcController controller(model, cfg);
    Vec z = z0;
    for (kmpc::Index k = 0; k < T; ++k) {
        Mat states(2, 2);
        states.row(0) = z.transpose();
        states.row(1) = z.transpose();
        const Mat inputs = Mat::Zero(2, 2);
        const Mat window = free_resp.middleRows(k, cfg.horizon + 1);
        const auto res = controller.step(states, inputs, 1, window);
        REQUIRE(res.status == kmpc::QpStatus::optimal);
        CHECK(res.u.cwiseAbs().maxCoeff() < 2e-5);
        z = model.A * z + model.B * res.u;
    }
    CHECK((z - free_resp.row(T).transpose()).cwiseAbs().maxCoeff() < 2e-4);
}

TEST_CASE("closed loop respects the input box exactly and logs consistently") {
    std::mt19937_64 rng(76);
    kmpc::ArmSurrogateParams params;
    params.noise_std = 0.002;
    const kmpc::PlantSpec plant = kmpc::arm_surrogate_plant(params);

    // Quick surrogate Koopman model: identify from a short ramp run.
    kmpc::Rng data_rng(77);
    std::vector<kmpc::Trial> trials;
    const Mat table = kmpc::make_ramp_table(3, 40, data_rng);
    trials.push_back(kmpc::simulate_trial(
        plant, [&](double t, kmpc::Index) { return kmpc::ramp_inputs(table, 5.0, t); }, 60.0, 0.1,
        data_rng, "quick"));

    kmpc::IdentifyConfig id;
    id.max_degree = 2;
    id.delays.state_dim = 2;
    id.delays.input_dim = 3;
    id.delays.state_delays = 1;
    id.delays.input_delays = 1;
    id.delays.sample_period = 0.1;
    id.lambda_grid = {0.0};
    id.eval_stride = 10;
    const auto result = kmpc::identify(id, trials);

    ControllerConfig cfg = default_config(3, 10);
    cfg.solver.max_iter = 500;
    MpcController controller(kmpc::prediction_view(result.model), cfg);
    const auto task = kmpc::make_reference(RefShape::circle, 0.08, 8.0, 0.1);
    kmpc::Rng loop_rng(78);
    const auto log = kmpc::run_closed_loop(plant, controller, task, loop_rng);

    REQUIRE(log.ticks() == task.ticks());
    CHECK_FALSE(log.diverged);
    CHECK(log.inputs.minCoeff() >= 0.0);
    CHECK(log.inputs.maxCoeff() <= 10.0);
    CHECK(log.mean_error == Catch::Approx(log.error.mean()));
    // Mean error recomputes from the logged series.
    double recomputed = 0.0;
    for (kmpc::Index k = 0; k < log.ticks(); ++k) {
        recomputed += (log.measured.row(k) - log.reference.row(k)).norm();
    }
    recomputed /= static_cast<double>(log.ticks());
    CHECK(log.mean_error == Catch::Approx(recomputed));
}
