#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "kmpc/model.hpp"
#include "kmpc/snapshots.hpp"
#include "kmpc/types.hpp"

namespace kmpc {

struct RolloutOptions {
    bool use_projected = true;     ///< roll (A_hat, B_hat); false selects raw (A, B) for ablation
    bool relift_each_step = false; ///< study mode: re-embed the projected output every step
    double overflow_guard = 1e12;  ///< lifted-state magnitude treated as divergence
};

class RolloutError : public std::runtime_error {
public:
    RolloutError(Index step, const std::string& what)
        : std::runtime_error("rollout diverged at step " + std::to_string(step) + ": " + what),
          step_(step) {}
    Index step() const { return step_; }

private:
    Index step_;
};

/// Multi-step prediction report. `predicted` / `actual` hold every compared
/// output sample, rollout segments concatenated in start-index order.
struct PredictionReport {
    Vec time;
    Mat predicted;
    Mat actual;
    Vec pointwise_error;            ///< Euclidean distance per compared sample
    double mean_error = 0.0;
    double normalized_error = 0.0;  ///< mean_error / mean(||actual||)
    std::vector<Index> segment_starts;

    Index points() const { return pointwise_error.size(); }
};

namespace detail {

inline void finish_report(PredictionReport& report) {
    const Index pts = report.predicted.rows();
    report.pointwise_error.resize(pts);
    double err_sum = 0.0;
    double act_sum = 0.0;
    for (Index i = 0; i < pts; ++i) {
        const double e = (report.predicted.row(i) - report.actual.row(i)).norm();
        report.pointwise_error[i] = e;
        err_sum += e;
        act_sum += report.actual.row(i).norm();
    }
    report.mean_error = pts > 0 ? err_sum / static_cast<double>(pts) : 0.0;
    const double act_mean = pts > 0 ? act_sum / static_cast<double>(pts) : 0.0;
    if (act_mean > 0.0) {
        report.normalized_error = report.mean_error / act_mean;
    } else {
        report.normalized_error = report.mean_error == 0.0
                                      ? 0.0
                                      : std::numeric_limits<double>::infinity();
    }
}

/// Shared evaluation loop: rolls `predict(k0)` for every admissible start
/// index and accumulates the compared points.
template <class PredictFn>
PredictionReport evaluate_rollouts(const Trial& trial, int horizon, int stride, Index min_start,
                                   PredictFn&& predict) {
    if (horizon < 1) throw std::invalid_argument("evaluate_prediction: horizon must be >= 1");
    if (stride < 1) throw std::invalid_argument("evaluate_prediction: stride must be >= 1");
    const Index L = trial.samples();
    const Index last_start = L - 1 - horizon;
    if (last_start < min_start) {
        throw std::invalid_argument("evaluate_prediction: trial '" + trial.name +
                                    "' too short for embedding window plus horizon");
    }

    std::vector<Mat> segments;
    std::vector<Index> starts;
    Index pts = 0;
    for (Index k0 = min_start; k0 <= last_start; k0 += stride) {
        segments.push_back(predict(k0));  // (horizon+1) x n
        starts.push_back(k0);
        pts += segments.back().rows();
    }

    PredictionReport report;
    const Index n = trial.states.cols();
    report.time.resize(pts);
    report.predicted.resize(pts, n);
    report.actual.resize(pts, n);
    report.segment_starts = starts;
    Index at = 0;
    for (std::size_t s = 0; s < segments.size(); ++s) {
        const Index k0 = starts[s];
        const Index len = segments[s].rows();
        report.predicted.middleRows(at, len) = segments[s];
        report.actual.middleRows(at, len) = trial.states.middleRows(k0, len);
        report.time.segment(at, len) = trial.time.segment(k0, len);
        at += len;
    }
    finish_report(report);
    return report;
}

}  // namespace detail

/// Pure linear recursion from an already-lifted state: z[j+1] = A z[j] + B u[j],
/// y[j] = C z[j]. No re-lifting happens here, so the lifted trajectory is
/// superposable exactly.
inline Mat rollout_lifted(const KoopmanModel& model, const Vec& z0, const Mat& inputs,
                          const RolloutOptions& opt = {}) {
    if (z0.size() != model.lifted_dim()) {
        throw std::invalid_argument("rollout_lifted: z0 has dimension " + std::to_string(z0.size()) +
                                    ", model expects " + std::to_string(model.lifted_dim()));
    }
    if (inputs.cols() != model.input_dim()) {
        throw std::invalid_argument("rollout_lifted: input trajectory must have " +
                                    std::to_string(model.input_dim()) + " columns");
    }
    const Mat& A = opt.use_projected ? model.A_hat : model.A;
    const Mat& B = opt.use_projected ? model.B_hat : model.B;
    const Index H = inputs.rows();
    Mat outputs(H + 1, model.state_dim());
    Vec z = z0;
    outputs.row(0) = (model.C * z).transpose();
    for (Index j = 0; j < H; ++j) {
        z = A * z + B * inputs.row(j).transpose();
        if (!z.allFinite() || z.cwiseAbs().maxCoeff() > opt.overflow_guard) {
            throw RolloutError(j + 1, "lifted state exceeded the overflow guard");
        }
        outputs.row(j + 1) = (model.C * z).transpose();
    }
    return outputs;
}

/// Rolls the lifted linear system forward from an embedded initial vector:
/// z[0] = psi(xi0), z[j+1] = A_hat z[j] + B_hat u[j], y[j] = C z[j].
/// Returns the (H+1) x n output trajectory for H = inputs.rows().
inline Mat rollout(const KoopmanModel& model, const Vec& xi0, const Mat& inputs,
                   const RolloutOptions& opt = {}) {
    const int n = model.state_dim();
    const int m = model.input_dim();
    if (xi0.size() != model.basis.embedded_dim()) {
        throw std::invalid_argument("rollout: embedded vector has dimension " +
                                    std::to_string(xi0.size()) + ", model expects " +
                                    std::to_string(model.basis.embedded_dim()));
    }
    if (inputs.cols() != m) {
        throw std::invalid_argument("rollout: input trajectory must have " + std::to_string(m) +
                                    " columns");
    }
    const Vec z0 = model.basis.lift(xi0);
    if (!opt.relift_each_step) {
        return rollout_lifted(model, z0, inputs, opt);
    }

    const Mat& A = opt.use_projected ? model.A_hat : model.A;
    const Mat& B = opt.use_projected ? model.B_hat : model.B;
    const Index H = inputs.rows();

    Mat outputs(H + 1, n);
    Vec z = z0;
    outputs.row(0) = (model.C * z).transpose();

    // Re-lift bookkeeping: most recent states first, matching the embedding layout.
    const int d = model.delays.state_delays;
    const int du = model.delays.input_delays;
    std::vector<Vec> past_states;
    std::vector<Vec> past_inputs;
    for (int j = 0; j <= d; ++j) {
        past_states.push_back(xi0.segment(static_cast<Index>(j) * n, n));
    }
    for (int j = 0; j < du; ++j) {
        past_inputs.push_back(xi0.segment(static_cast<Index>(d + 1) * n + static_cast<Index>(j) * m, m));
    }

    for (Index j = 0; j < H; ++j) {
        z = A * z + B * inputs.row(j).transpose();
        if (!z.allFinite() || z.cwiseAbs().maxCoeff() > opt.overflow_guard) {
            throw RolloutError(j + 1, "lifted state exceeded the overflow guard");
        }
        past_states.insert(past_states.begin(), model.C * z);
        past_states.resize(static_cast<std::size_t>(d + 1));
        if (du > 0) {
            past_inputs.insert(past_inputs.begin(), inputs.row(j).transpose());
            past_inputs.resize(static_cast<std::size_t>(du));
        }
        Vec xi(model.basis.embedded_dim());
        Index at = 0;
        for (const Vec& s : past_states) { xi.segment(at, n) = s; at += n; }
        for (const Vec& u : past_inputs) { xi.segment(at, m) = u; at += m; }
        z = model.basis.lift(xi);
        outputs.row(j + 1) = (model.C * z).transpose();
    }
    return outputs;
}

/// Evaluates multi-step predictions against a logged trial: from every
/// admissible start index (stepping by `stride`), rolls the model forward
/// `horizon` steps under the logged inputs and compares with the logged
/// outputs pointwise.
inline PredictionReport evaluate_prediction(const KoopmanModel& model, const Trial& trial,
                                            int horizon, int stride = 1,
                                            const RolloutOptions& opt = {},
                                            Index min_start_override = -1) {
    Index min_start = model.delays.window();
    if (min_start_override >= 0) min_start = std::max(min_start, min_start_override);
    return detail::evaluate_rollouts(trial, horizon, stride, min_start, [&](Index k0) {
        const Vec xi = embed_at(trial.states, trial.inputs, k0, model.delays);
        return rollout(model, xi, trial.inputs.middleRows(k0, horizon), opt);
    });
}

}  // namespace kmpc
