#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "kmpc/arx.hpp"
#include "../support/oracles.hpp"

using kmpc::fit_arx;
using kmpc::LinearSSModel;
using kmpc::Mat;
using kmpc::Trial;
using kmpc::Vec;

namespace {

/// Synthesizes a trial from known ARX(2,2) coefficients.
Trial synthesize_arx(const std::vector<Mat>& A, const std::vector<Mat>& B, int samples,
                     std::mt19937_64& rng, double noise = 0.0) {
    const int n = static_cast<int>(A[0].rows());
    const int m = static_cast<int>(B[0].cols());
    std::normal_distribution<double> gauss(0.0, 1.0);
    Trial trial;
    trial.name = "arx";
    trial.time = Vec::LinSpaced(samples, 0.0, 0.1 * (samples - 1));
    trial.states = Mat::Zero(samples, n);
    trial.inputs = Mat::Zero(samples, m);
    for (int k = 0; k < samples; ++k) {
        for (int i = 0; i < m; ++i) trial.inputs(k, i) = gauss(rng);
    }
    for (int i = 0; i < n; ++i) {
        trial.states(0, i) = gauss(rng);
        trial.states(1, i) = gauss(rng);
    }
    const int p = static_cast<int>(A.size());
    const int r = static_cast<int>(B.size());
    for (int k = std::max(p, r) - 1; k + 1 < samples; ++k) {
        Vec next = Vec::Zero(n);
        for (int i = 0; i < p; ++i) next += A[static_cast<std::size_t>(i)] * trial.states.row(k - i).transpose();
        for (int j = 0; j < r; ++j) next += B[static_cast<std::size_t>(j)] * trial.inputs.row(k - j).transpose();
        for (int i = 0; i < n; ++i) trial.states(k + 1, i) = next[i] + noise * gauss(rng);
    }
    return trial;
}

std::vector<Mat> stable_arx_a() {
    Mat A0(2, 2), A1(2, 2);
    A0 << 0.9, 0.05, -0.02, 0.85;
    A1 << -0.15, 0.01, 0.02, -0.1;
    return {A0, A1};
}

std::vector<Mat> arx_b() {
    Mat B0(2, 3), B1(2, 3);
    B0 << 0.1, 0.02, -0.05, 0.0, 0.08, 0.03;
    B1 << 0.05, -0.01, 0.02, 0.01, 0.0, 0.06;
    return {B0, B1};
}

}  // namespace

TEST_CASE("fit_arx recovers exact ARX(2,2) coefficients from noiseless data") {
    std::mt19937_64 rng(51);
    const auto A = stable_arx_a();
    const auto B = arx_b();
    const Trial trial = synthesize_arx(A, B, 400, rng);
    const LinearSSModel model = fit_arx({trial}, 2, 2);

    REQUIRE(model.A_coeffs.size() == 2);
    REQUIRE(model.B_coeffs.size() == 2);
    for (int i = 0; i < 2; ++i) {
        CHECK((model.A_coeffs[i] - A[i]).cwiseAbs().maxCoeff() < 1e-8);
        CHECK((model.B_coeffs[i] - B[i]).cwiseAbs().maxCoeff() < 1e-8);
    }
    // Paper's benchmark order: state dimension n*p = 4 for n = 2, p = 2.
    CHECK(model.realization_dim() == 4);
    // Observer canonical structure: C_L selects the current outputs exactly.
    CHECK(model.C_L.leftCols(2).isIdentity(0.0));
    CHECK(model.C_L.rightCols(2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("scalar ARX(1,1) reduces to ordinary least squares") {
    std::mt19937_64 rng(52);
    Mat A0(1, 1), B0(1, 1);
    A0 << 0.7;
    B0 << 0.3;
    const Trial trial = synthesize_arx({A0}, {B0}, 200, rng);
    const LinearSSModel model = fit_arx({trial}, 1, 1);
    CHECK(model.A_coeffs[0](0, 0) == Catch::Approx(0.7).margin(1e-10));
    CHECK(model.B_coeffs[0](0, 0) == Catch::Approx(0.3).margin(1e-10));
    CHECK(model.realization_dim() == 1);
}

TEST_CASE("state-space realization reproduces the difference equation exactly") {
    std::mt19937_64 rng(53);
    const auto A = stable_arx_a();
    const auto B = arx_b();
    const Trial trial = synthesize_arx(A, B, 120, rng, 0.01);
    const LinearSSModel model = fit_arx({trial}, 2, 2);

    const kmpc::Index k0 = 5;
    const int H = 30;
    const Vec x0 = kmpc::arx_initial_state(model, trial.states, trial.inputs, k0);
    const Mat ss = kmpc::rollout_linear(model, x0, trial.inputs.middleRows(k0, H));
    const Mat de = oracles::arx_difference_equation(model.A_coeffs, model.B_coeffs, trial.states,
                                                    trial.inputs, k0, trial.inputs.middleRows(k0, H));
    CHECK((ss - de).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("rollout_linear basics") {
    std::mt19937_64 rng(54);
    const auto A = stable_arx_a();
    const auto B = arx_b();
    const Trial trial = synthesize_arx(A, B, 300, rng);
    const LinearSSModel model = fit_arx({trial}, 2, 2);

    // Zero initial window and zero inputs give zero outputs.
    const Mat zeros = kmpc::rollout_linear(model, Vec::Zero(4), Mat::Zero(10, 3));
    CHECK(zeros.cwiseAbs().maxCoeff() == 0.0);

    // On exact data the prediction error is tiny.
    const auto report = kmpc::evaluate_prediction(model, trial, 25, 10);
    CHECK(report.mean_error < 1e-8);
}

TEST_CASE("koopman and linear evaluations share the report interface") {
    std::mt19937_64 rng(55);
    const Trial trial = synthesize_arx(stable_arx_a(), arx_b(), 150, rng, 0.005);
    const LinearSSModel model = fit_arx({trial}, 2, 2);
    const auto report = kmpc::evaluate_prediction(model, trial, 10, 5);
    CHECK(report.predicted.rows() == report.actual.rows());
    CHECK(report.pointwise_error.size() == report.predicted.rows());
    CHECK(report.mean_error == Catch::Approx(report.pointwise_error.mean()));
    CHECK(report.normalized_error >= 0.0);
}

TEST_CASE("rank-deficient regressors are rejected with advice") {
    Trial flat;
    flat.name = "flat";
    const int L = 50;
    flat.time = Vec::LinSpaced(L, 0.0, 0.1 * (L - 1));
    flat.states = Mat::Zero(L, 2);   // identically zero outputs
    flat.inputs = Mat::Zero(L, 3);   // identically zero inputs
    try {
        fit_arx({flat}, 2, 2);
        FAIL("expected a rank error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("rank") != std::string::npos);
    }
}

TEST_CASE("fit_arx validates lag arguments") {
    CHECK_THROWS_AS(fit_arx({}, 2, 2), std::invalid_argument);
    Trial t;
    t.time = Vec::LinSpaced(10, 0.0, 0.9);
    t.states = Mat::Ones(10, 1);
    t.inputs = Mat::Ones(10, 1);
    CHECK_THROWS_AS(fit_arx({t}, 0, 1), std::invalid_argument);
}
