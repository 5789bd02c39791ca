#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kmpc/basis.hpp"
#include "kmpc/lasso.hpp"
#include "kmpc/linalg.hpp"
#include "kmpc/model.hpp"
#include "kmpc/prediction.hpp"
#include "kmpc/snapshots.hpp"
#include "kmpc/types.hpp"

namespace kmpc {

/// Least-squares Koopman matrix: the minimum-Frobenius-norm solution of
/// Gamma_alpha * U = Gamma_beta via the SVD pseudoinverse.
inline KoopmanMatrix fit_least_squares(const DataMatrices& data, double pinv_tolerance = -1.0) {
    if (data.rows() < 1) {
        throw std::invalid_argument("fit_least_squares: need at least one snapshot row");
    }
    KoopmanMatrix out;
    out.U = pseudoinverse(data.Gamma_alpha, pinv_tolerance) * data.Gamma_beta;
    out.lambda = 0.0;
    out.density = density(out.U);
    out.converged = true;
    out.sweeps = 0;
    return out;
}

/// LASSO Koopman matrix: approximately minimizes
///   ||Gamma_alpha U - Gamma_beta||_F^2 + lambda ||vec(U)||_1
/// by cyclic coordinate descent per column on the shared Gram matrix.
inline KoopmanMatrix fit_lasso(const DataMatrices& data, double lambda,
                               const LassoOptions& opt = {}, const Mat* warm = nullptr) {
    if (lambda < 0.0) {
        throw std::invalid_argument("fit_lasso: lambda must be >= 0");
    }
    const Mat gram = data.Gamma_alpha.transpose() * data.Gamma_alpha;
    const Mat corr = data.Gamma_alpha.transpose() * data.Gamma_beta;
    LassoSolution sol = lasso_gram(gram, corr, lambda, opt, warm);
    KoopmanMatrix out;
    out.U = std::move(sol.coefficients);
    out.lambda = lambda;
    out.density = density(out.U);
    out.converged = sol.converged;
    out.sweeps = sol.max_sweeps;
    return out;
}

struct ExtractedModel {
    Mat A;
    Mat B;
    Mat C;
    /// Max-abs deviation of the discarded bottom block of U^T from [O I].
    double bottom_block_deviation = 0.0;
};

/// Partitions U^T into [A B; *(discarded)] and builds C = [I_n 0]. The
/// bottom block is not assumed to equal [O I]; its gap is reported.
inline ExtractedModel extract_model(const Mat& U, int n, int m) {
    if (U.rows() != U.cols()) {
        throw std::invalid_argument("extract_model: U must be square");
    }
    const Index N = U.rows() - m;
    if (m < 0 || N < n || n < 1) {
        throw std::invalid_argument("extract_model: invalid partition (rows=" +
                                    std::to_string(U.rows()) + ", n=" + std::to_string(n) +
                                    ", m=" + std::to_string(m) + ")");
    }
    const Mat Ut = U.transpose();
    ExtractedModel out;
    out.A = Ut.topLeftCorner(N, N);
    out.B = Ut.topRightCorner(N, m);
    out.C = output_projection(n, N);
    if (m > 0) {
        Mat expected = Mat::Zero(m, N + m);
        expected.rightCols(m).setIdentity();
        out.bottom_block_deviation = max_abs(Ut.bottomRows(m) - expected);
    }
    return out;
}

/// Fits the manifold-projection operator: builds Omega_a with rows
/// (A psi(a[k]) + B u[k])^T and returns P = (Omega_a^+ Psi_b)^T.
inline Mat fit_projection(const Mat& A, const Mat& B, const DataMatrices& data,
                          double pinv_tolerance = -1.0) {
    const Index N = A.rows();
    if (A.cols() != N || B.rows() != N) {
        throw std::invalid_argument("fit_projection: A must be NxN and B Nxm");
    }
    Mat AB(N, N + B.cols());
    AB << A, B;
    const Mat omega_a = data.Gamma_alpha * AB.transpose();  // K x N
    return (pseudoinverse(omega_a, pinv_tolerance) * data.Psi_b).transpose();
}

struct IdentifyConfig {
    int max_degree = 4;
    DelaySpec delays;
    std::vector<double> lambda_grid;
    double lasso_tol = 1e-6;
    int lasso_max_iter = 10000;
    double pinv_tolerance = -1.0;
    double holdout_fraction = 0.1;  ///< final slice of each trial, selection only
    bool holdout_selection = true;  ///< false scores candidates in-sample
    int eval_horizon = 25;          ///< rollout steps per scored segment
    int eval_stride = 5;            ///< start-index stride for scoring
    bool column_scaling = false;    ///< per-column unit-RMS standardization
    int threads = 0;
};

struct LambdaReportRow {
    double lambda = 0.0;
    double density = 1.0;  ///< density of A_hat
    double normalized_error = 0.0;
    bool converged = true;
};

struct IdentifyResult {
    KoopmanModel model;
    std::vector<LambdaReportRow> report;
    std::size_t chosen = 0;
};

namespace detail {

/// Rescales the solution of the standardized problem back to raw
/// coordinates: U = D^{-1} U_tilde D.
inline Mat unscale_solution(const Mat& U_tilde, const Vec& scales) {
    Mat U = U_tilde;
    for (Index i = 0; i < U.rows(); ++i) {
        for (Index j = 0; j < U.cols(); ++j) {
            U(i, j) *= scales[j] / scales[i];
        }
    }
    return U;
}

inline double score_candidate(const KoopmanModel& model, const std::vector<Trial>& trials,
                              const std::vector<Index>& eval_starts, int horizon, int stride) {
    double err_sum = 0.0;
    double act_sum = 0.0;
    Index pts = 0;
    for (std::size_t t = 0; t < trials.size(); ++t) {
        // Short holdout slices shrink the scoring horizon rather than fail.
        const Index start_min = std::max<Index>(model.delays.window(), eval_starts[t]);
        const Index room = trials[t].samples() - 1 - start_min;
        const int h = static_cast<int>(std::min<Index>(horizon, room));
        if (h < 1) continue;
        PredictionReport rep;
        try {
            rep = evaluate_prediction(model, trials[t], h, stride, {}, eval_starts[t]);
        } catch (const RolloutError&) {
            return std::numeric_limits<double>::infinity();
        }
        err_sum += rep.mean_error * static_cast<double>(rep.points());
        for (Index i = 0; i < rep.actual.rows(); ++i) {
            act_sum += rep.actual.row(i).norm();
        }
        pts += rep.points();
    }
    if (pts == 0) return std::numeric_limits<double>::infinity();
    const double mean_err = err_sum / static_cast<double>(pts);
    const double mean_act = act_sum / static_cast<double>(pts);
    return mean_act > 0.0 ? mean_err / mean_act
                          : (mean_err == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
}

}  // namespace detail

/// Runs the full identification pipeline over a lambda grid: lift, regress
/// (least squares at lambda = 0, LASSO otherwise, warm-started along the
/// grid), extract (A, B, C), fit the projection P, and score each candidate
/// by normalized multi-step prediction error on the held-out tail of each
/// trial. Returns the error-minimizing converged model plus the
/// (lambda, density, error) table.
inline IdentifyResult identify(const IdentifyConfig& config, const std::vector<Trial>& trials) {
    if (trials.empty()) {
        throw std::invalid_argument("identify: no trials given");
    }
    if (config.lambda_grid.empty()) {
        throw std::invalid_argument("identify: empty lambda grid");
    }
    config.delays.validate();

    const int n = config.delays.state_dim;
    const int m = config.delays.input_dim;
    const MonomialBasis basis(config.delays.embedded_dim(), config.max_degree);

    // Train on each trial's head, hold out the final slice for selection.
    std::vector<Trial> train_trials;
    std::vector<Index> eval_starts(trials.size(), 0);
    for (std::size_t t = 0; t < trials.size(); ++t) {
        const Index L = trials[t].samples();
        Index split = L;
        if (config.holdout_selection) {
            split = L - static_cast<Index>(std::floor(static_cast<double>(L) * config.holdout_fraction));
            split = std::max<Index>(split, config.delays.window() + 2);
            split = std::min(split, L);
        }
        Trial head;
        head.name = trials[t].name;
        head.time = trials[t].time.head(split);
        head.states = trials[t].states.topRows(split);
        head.inputs = trials[t].inputs.topRows(split);
        train_trials.push_back(std::move(head));
        eval_starts[t] = config.holdout_selection ? split : 0;
    }

    const SnapshotSet snapshots = build_delay_snapshots(train_trials, config.delays);
    const DataMatrices data = assemble_matrices(basis, snapshots);
    const Index p = data.Gamma_alpha.cols();

    Vec scales = Vec::Ones(p);
    DataMatrices scaled;
    const DataMatrices* fit_data = &data;
    if (config.column_scaling) {
        for (Index j = 0; j < p; ++j) {
            const double rms = std::sqrt(data.Gamma_alpha.col(j).squaredNorm() /
                                         static_cast<double>(data.rows()));
            scales[j] = rms > 0.0 ? rms : 1.0;
        }
        scaled = data;
        scaled.Gamma_alpha = data.Gamma_alpha * scales.cwiseInverse().asDiagonal();
        scaled.Gamma_beta = data.Gamma_beta * scales.cwiseInverse().asDiagonal();
        fit_data = &scaled;
    }

    const Mat gram = fit_data->Gamma_alpha.transpose() * fit_data->Gamma_alpha;
    const Mat corr = fit_data->Gamma_alpha.transpose() * fit_data->Gamma_beta;
    LassoOptions lasso_opt;
    lasso_opt.tol = config.lasso_tol;
    lasso_opt.max_iter = config.lasso_max_iter;
    lasso_opt.threads = config.threads;

    IdentifyResult result{KoopmanModel(basis, config.delays), {}, 0};
    std::optional<KoopmanModel> best;
    std::size_t best_index = 0;
    double best_error = std::numeric_limits<double>::infinity();
    Mat warm;
    bool have_warm = false;
    std::vector<std::string> diagnostics;

    for (std::size_t li = 0; li < config.lambda_grid.size(); ++li) {
        const double lambda = config.lambda_grid[li];
        if (lambda < 0.0) {
            throw std::invalid_argument("identify: negative lambda in grid");
        }
        Mat U_tilde;
        bool converged = true;
        if (lambda == 0.0) {
            U_tilde = pseudoinverse(fit_data->Gamma_alpha, config.pinv_tolerance) *
                      fit_data->Gamma_beta;
        } else {
            LassoSolution sol = lasso_gram(gram, corr, lambda, lasso_opt,
                                           have_warm ? &warm : nullptr);
            U_tilde = std::move(sol.coefficients);
            converged = sol.converged;
        }
        warm = U_tilde;
        have_warm = true;

        const Mat U = config.column_scaling ? detail::unscale_solution(U_tilde, scales) : U_tilde;
        ExtractedModel ex = extract_model(U, n, m);

        KoopmanModel candidate(basis, config.delays);
        candidate.A = std::move(ex.A);
        candidate.B = std::move(ex.B);
        candidate.C = std::move(ex.C);
        candidate.P = fit_projection(candidate.A, candidate.B, data, config.pinv_tolerance);
        candidate.A_hat = candidate.P * candidate.A;
        candidate.B_hat = candidate.P * candidate.B;
        candidate.lambda = lambda;
        candidate.density = density(candidate.A_hat);
        candidate.bottom_block_deviation = ex.bottom_block_deviation;
        if (config.column_scaling) candidate.column_scaling = scales;

        const double err = detail::score_candidate(candidate, trials, eval_starts,
                                                   config.eval_horizon, config.eval_stride);
        result.report.push_back({lambda, candidate.density, err, converged});
        if (!converged) {
            diagnostics.push_back("lambda=" + std::to_string(lambda) +
                                  " did not converge within the sweep cap");
        }
        if (converged && err < best_error) {
            best_error = err;
            best = std::move(candidate);
            best_index = li;
        }
    }

    if (!best.has_value()) {
        std::string what = "identify: no converged candidate;";
        for (const auto& d : diagnostics) what += " " + d + ";";
        throw std::runtime_error(what);
    }
    result.model = std::move(*best);
    result.chosen = best_index;
    return result;
}

}  // namespace kmpc
