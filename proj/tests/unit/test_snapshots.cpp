#include <catch2/catch_amalgamated.hpp>

#include "kmpc/snapshots.hpp"

using kmpc::build_delay_snapshots;
using kmpc::DelaySpec;
using kmpc::Mat;
using kmpc::SnapshotSet;
using kmpc::Trial;
using kmpc::Vec;

namespace {

Trial ramp_trial(int samples, int n, int m, double T_s = 0.1, double offset = 0.0) {
    Trial trial;
    trial.name = "ramp";
    trial.time.resize(samples);
    trial.states.resize(samples, n);
    trial.inputs.resize(samples, m);
    for (int k = 0; k < samples; ++k) {
        trial.time[k] = k * T_s;
        for (int i = 0; i < n; ++i) trial.states(k, i) = offset + k + 0.1 * i;
        for (int i = 0; i < m; ++i) trial.inputs(k, i) = 100 + offset + k + 0.1 * i;
    }
    return trial;
}

}  // namespace

TEST_CASE("delay-free snapshots reduce to (x[k], x[k+1])") {
    DelaySpec d;
    d.state_dim = 2;
    d.input_dim = 1;
    const Trial trial = ramp_trial(5, 2, 1);
    const SnapshotSet set = build_delay_snapshots({trial}, d);
    REQUIRE(set.count() == 4);
    for (kmpc::Index k = 0; k < set.count(); ++k) {
        CHECK(set.a.row(k) == trial.states.row(k));
        CHECK(set.b.row(k) == trial.states.row(k + 1));
        CHECK(set.u.row(k) == trial.inputs.row(k));
    }
}

TEST_CASE("single state and input delay gives the paper's 7-dim embedding") {
    DelaySpec d;
    d.state_dim = 2;
    d.input_dim = 3;
    d.state_delays = 1;
    d.input_delays = 1;
    REQUIRE(d.embedded_dim() == 7);

    const Trial trial = ramp_trial(6, 2, 3);
    const SnapshotSet set = build_delay_snapshots({trial}, d);
    REQUIRE(set.a.cols() == 7);
    // k = 1 is the first valid index: a = [x[1], x[0], u[0]].
    Vec expected(7);
    expected << trial.states.row(1).transpose(), trial.states.row(0).transpose(),
        trial.inputs.row(0).transpose();
    CHECK(set.a.row(0).transpose() == expected);
    // b advances the pattern by one step: [x[2], x[1], u[1]].
    Vec expected_b(7);
    expected_b << trial.states.row(2).transpose(), trial.states.row(1).transpose(),
        trial.inputs.row(1).transpose();
    CHECK(set.b.row(0).transpose() == expected_b);
    CHECK(set.u.row(0) == trial.inputs.row(1));
}

TEST_CASE("trial boundaries are never bridged") {
    DelaySpec d;
    d.state_dim = 1;
    d.input_dim = 1;
    d.state_delays = 1;
    d.input_delays = 1;
    const int L = 8;
    const Trial t1 = ramp_trial(L, 1, 1);
    const Trial t2 = ramp_trial(L, 1, 1, 0.1, 1000.0);
    const SnapshotSet set = build_delay_snapshots({t1, t2}, d);

    // Count by enumeration: per trial, valid k runs from max(d, d_u) to L-2.
    const int per_trial = L - 1 - 1;
    REQUIRE(set.count() == 2 * per_trial);
    // No a-vector may mix small (trial 1) and large (trial 2) magnitudes.
    for (kmpc::Index k = 0; k < set.count(); ++k) {
        const double lo = set.a.row(k).minCoeff();
        const double hi = set.a.row(k).maxCoeff();
        const bool first = hi < 500.0;
        const bool second = lo > 500.0;
        CHECK((first || second));
    }
    CHECK(set.trial_of_snapshot.front() == 0);
    CHECK(set.trial_of_snapshot.back() == 1);
}

TEST_CASE("shift property: delay-free b[k] equals a[k+1] within one trial") {
    DelaySpec d;
    d.state_dim = 2;
    d.input_dim = 1;
    const Trial trial = ramp_trial(10, 2, 1);
    const SnapshotSet set = build_delay_snapshots({trial}, d);
    for (kmpc::Index k = 0; k + 1 < set.count(); ++k) {
        CHECK(set.b.row(k) == set.a.row(k + 1));
    }
}

TEST_CASE("too-short trials and non-uniform sampling are rejected") {
    DelaySpec d;
    d.state_dim = 1;
    d.input_dim = 1;
    d.state_delays = 2;
    CHECK_THROWS_AS(build_delay_snapshots({ramp_trial(3, 1, 1)}, d), std::invalid_argument);

    Trial bad = ramp_trial(10, 1, 1);
    bad.time[5] += 0.03;
    DelaySpec d0;
    d0.state_dim = 1;
    d0.input_dim = 1;
    CHECK_THROWS_AS(build_delay_snapshots({bad}, d0), std::invalid_argument);
}

TEST_CASE("assemble_matrices builds the Gamma blocks") {
    using kmpc::assemble_matrices;
    using kmpc::MonomialBasis;

    DelaySpec d;
    d.state_dim = 1;
    d.input_dim = 1;
    SnapshotSet set;
    set.a = Mat(1, 1);
    set.a << 2.0;
    set.b = Mat(1, 1);
    set.b << 3.0;
    set.u = Mat(1, 1);
    set.u << 5.0;

    const MonomialBasis basis(1, 1);  // [x, 1]
    const kmpc::DataMatrices data = assemble_matrices(basis, set);
    REQUIRE(data.Gamma_alpha.rows() == 1);
    CHECK(data.Gamma_alpha(0, 0) == 2.0);
    CHECK(data.Gamma_alpha(0, 1) == 1.0);
    CHECK(data.Gamma_alpha(0, 2) == 5.0);
    CHECK(data.Gamma_beta(0, 0) == 3.0);
    CHECK(data.Gamma_beta(0, 1) == 1.0);
    CHECK(data.Gamma_beta(0, 2) == 5.0);
}

TEST_CASE("assemble_matrices keeps one row per snapshot and a shared input block") {
    using kmpc::assemble_matrices;
    using kmpc::MonomialBasis;

    DelaySpec d;
    d.state_dim = 2;
    d.input_dim = 2;
    const Trial trial = ramp_trial(9, 2, 2);
    const SnapshotSet set = build_delay_snapshots({trial}, d);
    const MonomialBasis basis(2, 3);
    const kmpc::DataMatrices data = assemble_matrices(basis, set);

    CHECK(data.Psi_a.rows() == set.count());
    CHECK(data.Psi_a.cols() == basis.size());
    const Mat diff = data.Gamma_alpha - data.Gamma_beta;
    CHECK(diff.rightCols(2).cwiseAbs().maxCoeff() == 0.0);

    SnapshotSet empty;
    empty.a = Mat(0, 2);
    empty.b = Mat(0, 2);
    empty.u = Mat(0, 2);
    CHECK_THROWS_AS(assemble_matrices(basis, empty), std::invalid_argument);
}
