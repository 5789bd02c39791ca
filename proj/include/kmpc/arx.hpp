#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

#include "kmpc/prediction.hpp"
#include "kmpc/snapshots.hpp"
#include "kmpc/types.hpp"

namespace kmpc {

/// Benchmark linear state-space model: an ARX(p, r) least-squares fit
///   y[k+1] = sum_i A_i y[k-i] + sum_j B_j u[k-j]
/// realized in block observer canonical form with C_L = [I 0] selecting the
/// current outputs.
struct LinearSSModel {
    Mat A_L;
    Mat B_L;
    Mat C_L;
    std::vector<Mat> A_coeffs;  ///< p blocks, n x n
    std::vector<Mat> B_coeffs;  ///< r blocks, n x m
    int output_lags = 0;        ///< p
    int input_lags = 0;         ///< r
    int state_dim = 0;          ///< n outputs
    int input_dim = 0;          ///< m
    double sample_period = 0.1;

    int lag_window() const { return std::max(output_lags, input_lags); }
    Index realization_dim() const { return A_L.rows(); }
};

namespace detail {

/// Block observer canonical realization of the ARX coefficient blocks.
inline void realize_observer_canonical(LinearSSModel& model) {
    const int n = model.state_dim;
    const int m = model.input_dim;
    const int pmax = model.lag_window();
    const Index NL = static_cast<Index>(n) * pmax;
    model.A_L = Mat::Zero(NL, NL);
    model.B_L = Mat::Zero(NL, m);
    model.C_L = Mat::Zero(n, NL);
    model.C_L.leftCols(n).setIdentity();
    for (int i = 0; i < pmax; ++i) {
        if (i < model.output_lags) {
            model.A_L.block(static_cast<Index>(i) * n, 0, n, n) = model.A_coeffs[static_cast<std::size_t>(i)];
        }
        if (i + 1 < pmax) {
            model.A_L.block(static_cast<Index>(i) * n, static_cast<Index>(i + 1) * n, n, n).setIdentity();
        }
        if (i < model.input_lags) {
            model.B_L.block(static_cast<Index>(i) * n, 0, n, m) = model.B_coeffs[static_cast<std::size_t>(i)];
        }
    }
}

}  // namespace detail

/// Least-squares ARX fit over all trials (trial boundaries are respected),
/// realized in observer canonical form. Defaults p = r = 2 give the
/// four-dimensional benchmark model for two outputs.
inline LinearSSModel fit_arx(const std::vector<Trial>& trials, int output_lags = 2,
                             int input_lags = 2) {
    if (trials.empty()) throw std::invalid_argument("fit_arx: no trials");
    if (output_lags < 1 || input_lags < 1) {
        throw std::invalid_argument("fit_arx: lags must be >= 1");
    }
    const int p = output_lags;
    const int r = input_lags;
    const int n = static_cast<int>(trials[0].states.cols());
    const int m = static_cast<int>(trials[0].inputs.cols());
    const int w = std::max(p, r) - 1;

    Index rows = 0;
    for (const Trial& trial : trials) {
        if (trial.states.cols() != n || trial.inputs.cols() != m) {
            throw std::invalid_argument("fit_arx: inconsistent trial dimensions");
        }
        const Index L = trial.samples();
        if (L >= w + 2) rows += L - 1 - w;
    }
    if (rows < 1) throw std::invalid_argument("fit_arx: trials shorter than the lag window");

    const Index cols = static_cast<Index>(n) * p + static_cast<Index>(m) * r;
    Mat regressors(rows, cols);
    Mat targets(rows, n);
    Index at = 0;
    for (const Trial& trial : trials) {
        const Index L = trial.samples();
        for (Index k = w; k + 1 < L; ++k) {
            Index c = 0;
            for (int i = 0; i < p; ++i) {
                regressors.block(at, c, 1, n) = trial.states.row(k - i);
                c += n;
            }
            for (int j = 0; j < r; ++j) {
                regressors.block(at, c, 1, m) = trial.inputs.row(k - j);
                c += m;
            }
            targets.row(at) = trial.states.row(k + 1);
            ++at;
        }
    }

    Eigen::ColPivHouseholderQR<Mat> qr(regressors);
    if (qr.rank() < cols) {
        throw std::runtime_error("fit_arx: rank-deficient regressor matrix (rank " +
                                 std::to_string(qr.rank()) + " of " + std::to_string(cols) +
                                 "); collect more or richer data");
    }
    const Mat theta = qr.solve(targets);  // cols x n

    LinearSSModel model;
    model.output_lags = p;
    model.input_lags = r;
    model.state_dim = n;
    model.input_dim = m;
    model.sample_period = trials[0].samples() > 1 ? trials[0].time[1] - trials[0].time[0] : 0.1;
    for (int i = 0; i < p; ++i) {
        model.A_coeffs.push_back(theta.middleRows(static_cast<Index>(i) * n, n).transpose());
    }
    for (int j = 0; j < r; ++j) {
        model.B_coeffs.push_back(
            theta.middleRows(static_cast<Index>(n) * p + static_cast<Index>(j) * m, m).transpose());
    }
    detail::realize_observer_canonical(model);
    return model;
}

/// Canonical state at sample k from the logged trajectory:
/// x_1 = y[k], and for i >= 2
/// x_i = sum_{j >= i-1} (A_j y[k-(j-i+2)] + B_j u[k-(j-i+2)]).
inline Vec arx_initial_state(const LinearSSModel& model, const Mat& states, const Mat& inputs,
                             Index k) {
    const int n = model.state_dim;
    const int m = model.input_dim;
    const int pmax = model.lag_window();
    if (k < pmax - 1 || k >= states.rows()) {
        throw std::out_of_range("arx_initial_state: index outside the lag window");
    }
    Vec x = Vec::Zero(model.realization_dim());
    x.head(n) = states.row(k).transpose();
    for (int i = 2; i <= pmax; ++i) {
        Vec block = Vec::Zero(n);
        for (int j = i - 1; j < pmax; ++j) {
            const Index back = k - static_cast<Index>(j - i + 2);
            if (j < model.output_lags) {
                block += model.A_coeffs[static_cast<std::size_t>(j)] * states.row(back).transpose();
            }
            if (j < model.input_lags) {
                block += model.B_coeffs[static_cast<std::size_t>(j)] * inputs.row(back).transpose();
            }
        }
        x.segment(static_cast<Index>(i - 1) * n, n) = block;
    }
    return x;
}

/// Linear rollout from a canonical state: y[j] = C_L x[j],
/// x[j+1] = A_L x[j] + B_L u[j]. Returns (H+1) x n outputs.
inline Mat rollout_linear(const LinearSSModel& model, const Vec& x0, const Mat& inputs,
                          double overflow_guard = 1e12) {
    if (x0.size() != model.realization_dim()) {
        throw std::invalid_argument("rollout_linear: state dimension mismatch");
    }
    if (inputs.cols() != model.input_dim) {
        throw std::invalid_argument("rollout_linear: input dimension mismatch");
    }
    const Index H = inputs.rows();
    Mat outputs(H + 1, model.state_dim);
    Vec x = x0;
    outputs.row(0) = (model.C_L * x).transpose();
    for (Index j = 0; j < H; ++j) {
        x = model.A_L * x + model.B_L * inputs.row(j).transpose();
        if (!x.allFinite() || x.cwiseAbs().maxCoeff() > overflow_guard) {
            throw RolloutError(j + 1, "linear state exceeded the overflow guard");
        }
        outputs.row(j + 1) = (model.C_L * x).transpose();
    }
    return outputs;
}

/// Same evaluation harness as the Koopman model; reports are directly
/// comparable.
inline PredictionReport evaluate_prediction(const LinearSSModel& model, const Trial& trial,
                                            int horizon, int stride = 1,
                                            Index min_start_override = -1) {
    Index min_start = model.lag_window() - 1;
    if (min_start_override >= 0) min_start = std::max(min_start, min_start_override);
    return detail::evaluate_rollouts(trial, horizon, stride, min_start, [&](Index k0) {
        const Vec x0 = arx_initial_state(model, trial.states, trial.inputs, k0);
        return rollout_linear(model, x0, trial.inputs.middleRows(k0, horizon));
    });
}

}  // namespace kmpc
