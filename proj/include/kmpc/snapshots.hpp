#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "kmpc/basis.hpp"
#include "kmpc/types.hpp"

namespace kmpc {

/// Delay-embedding layout: [x[k], x[k-1], ..., x[k-d], u[k-1], ..., u[k-d_u]].
struct DelaySpec {
    int state_dim = 0;          ///< n
    int input_dim = 0;          ///< m
    int state_delays = 0;       ///< d, past states appended
    int input_delays = 0;       ///< d_u, past inputs appended
    double sample_period = 0.1; ///< T_s seconds

    int embedded_dim() const {
        return state_dim * (state_delays + 1) + input_dim * input_delays;
    }

    void validate() const {
        if (state_dim < 1) throw std::invalid_argument("DelaySpec: state_dim must be >= 1");
        if (input_dim < 0) throw std::invalid_argument("DelaySpec: input_dim must be >= 0");
        if (state_delays < 0 || input_delays < 0) {
            throw std::invalid_argument("DelaySpec: delay counts must be >= 0");
        }
        if (!(sample_period > 0.0)) {
            throw std::invalid_argument("DelaySpec: sample_period must be > 0");
        }
    }

    int window() const { return std::max(state_delays, input_delays); }
};

/// One uniformly sampled trajectory log (a single trial).
struct Trial {
    Vec time;    ///< length L
    Mat states;  ///< L x n
    Mat inputs;  ///< L x m
    std::string name;

    Index samples() const { return time.size(); }
};

/// Delay-embedded snapshot pairs (a[k], b[k]) with the matched input u[k].
/// Rows of `a` and `b` are embedded vectors in R^q; b[k] is the embedding
/// one step after a[k], never bridging a trial boundary.
struct SnapshotSet {
    Mat a;  // K x q
    Mat b;  // K x q
    Mat u;  // K x m
    std::vector<int> trial_of_snapshot;
    std::vector<std::string> trial_names;

    Index count() const { return a.rows(); }
};

/// Data matrices compiled from a lifted snapshot set. Row k of Gamma_alpha
/// is [psi(a[k])^T, u[k]^T]; the input block is shared with Gamma_beta.
struct DataMatrices {
    Mat Psi_a;        // K x N
    Mat Psi_b;        // K x N
    Mat Gamma_alpha;  // K x (N+m)
    Mat Gamma_beta;   // K x (N+m)

    Index rows() const { return Psi_a.rows(); }
    Index lifted_dim() const { return Psi_a.cols(); }
    Index input_dim() const { return Gamma_alpha.cols() - Psi_a.cols(); }
};

/// Embedded vector at sample k of a trajectory: requires k >= window and,
/// when input delays are used, k >= input_delays.
inline Vec embed_at(const Mat& states, const Mat& inputs, Index k, const DelaySpec& delays) {
    const int n = delays.state_dim;
    const int m = delays.input_dim;
    if (k < delays.window() || k >= states.rows()) {
        throw std::out_of_range("embed_at: index " + std::to_string(k) +
                                " outside the embeddable range");
    }
    Vec xi(delays.embedded_dim());
    Index at = 0;
    for (int j = 0; j <= delays.state_delays; ++j) {
        xi.segment(at, n) = states.row(k - j).transpose();
        at += n;
    }
    for (int j = 1; j <= delays.input_delays; ++j) {
        xi.segment(at, m) = inputs.row(k - j).transpose();
        at += m;
    }
    return xi;
}

/// Builds delay-embedded snapshot pairs from a list of trials. Pairs never
/// span a trial boundary.
inline SnapshotSet build_delay_snapshots(const std::vector<Trial>& trials, const DelaySpec& delays) {
    delays.validate();
    const int n = delays.state_dim;
    const int m = delays.input_dim;
    const int w = delays.window();
    const double ts_tol = 1e-6 * delays.sample_period;

    Index total = 0;
    for (const Trial& trial : trials) {
        const Index L = trial.samples();
        if (trial.states.rows() != L || trial.inputs.rows() != L) {
            throw std::invalid_argument("build_delay_snapshots: trial '" + trial.name +
                                        "' has inconsistent row counts");
        }
        if (trial.states.cols() != n || trial.inputs.cols() != m) {
            throw std::invalid_argument("build_delay_snapshots: trial '" + trial.name +
                                        "' does not match the delay spec dimensions");
        }
        if (L < w + 2) {
            throw std::invalid_argument("build_delay_snapshots: trial '" + trial.name +
                                        "' is shorter than the embedding window (" +
                                        std::to_string(L) + " samples, need >= " +
                                        std::to_string(w + 2) + ")");
        }
        for (Index k = 1; k < L; ++k) {
            if (std::abs(trial.time[k] - trial.time[k - 1] - delays.sample_period) > ts_tol) {
                throw std::invalid_argument("build_delay_snapshots: trial '" + trial.name +
                                            "' is not uniformly sampled at T_s near sample " +
                                            std::to_string(k));
            }
        }
        total += L - 1 - w;
    }

    SnapshotSet set;
    set.a.resize(total, delays.embedded_dim());
    set.b.resize(total, delays.embedded_dim());
    set.u.resize(total, m);
    set.trial_of_snapshot.resize(static_cast<std::size_t>(total));

    Index row = 0;
    for (std::size_t t = 0; t < trials.size(); ++t) {
        const Trial& trial = trials[t];
        set.trial_names.push_back(trial.name);
        const Index L = trial.samples();
        for (Index k = w; k + 1 < L; ++k) {
            set.a.row(row) = embed_at(trial.states, trial.inputs, k, delays).transpose();
            set.b.row(row) = embed_at(trial.states, trial.inputs, k + 1, delays).transpose();
            set.u.row(row) = trial.inputs.row(k);
            set.trial_of_snapshot[static_cast<std::size_t>(row)] = static_cast<int>(t);
            ++row;
        }
    }
    return set;
}

/// Lifts a snapshot set and compiles the Psi / Gamma data matrices.
inline DataMatrices assemble_matrices(const MonomialBasis& basis, const SnapshotSet& snapshots) {
    if (snapshots.count() == 0) {
        throw std::invalid_argument("assemble_matrices: empty snapshot set");
    }
    if (snapshots.a.cols() != basis.embedded_dim()) {
        throw std::invalid_argument("assemble_matrices: snapshot dimension " +
                                    std::to_string(snapshots.a.cols()) +
                                    " does not match basis domain " +
                                    std::to_string(basis.embedded_dim()));
    }
    const Index K = snapshots.count();
    const Index N = basis.size();
    const Index m = snapshots.u.cols();

    DataMatrices data;
    data.Psi_a.resize(K, N);
    data.Psi_b.resize(K, N);
    for (Index k = 0; k < K; ++k) {
        data.Psi_a.row(k) = basis.lift(snapshots.a.row(k).transpose()).transpose();
        data.Psi_b.row(k) = basis.lift(snapshots.b.row(k).transpose()).transpose();
    }
    data.Gamma_alpha.resize(K, N + m);
    data.Gamma_beta.resize(K, N + m);
    data.Gamma_alpha << data.Psi_a, snapshots.u;
    data.Gamma_beta << data.Psi_b, snapshots.u;
    return data;
}

}  // namespace kmpc
