#pragma once

#include <stdexcept>
#include <string>

#include "kmpc/basis.hpp"
#include "kmpc/snapshots.hpp"
#include "kmpc/types.hpp"

namespace kmpc {

/// Finite-dimensional Koopman operator approximation on the input-augmented
/// lifted space, plus the regression metadata.
struct KoopmanMatrix {
    Mat U;                  ///< (N+m) x (N+m)
    double lambda = 0.0;    ///< L1 weight used for the fit
    double density = 1.0;   ///< fraction of nonzero entries of U
    bool converged = true;
    int sweeps = 0;         ///< coordinate-descent sweeps (0 for a direct fit)
};

/// Lifted linear model extracted from the Koopman matrix: raw (A, B),
/// output projection C = [I 0], manifold-projection P, and the corrected
/// pair A_hat = P*A, B_hat = P*B used for prediction and control.
struct KoopmanModel {
    MonomialBasis basis;
    DelaySpec delays;
    Mat A;
    Mat B;
    Mat C;
    Mat P;
    Mat A_hat;
    Mat B_hat;
    double lambda = 0.0;
    double density = 1.0;  ///< fraction of nonzero entries of A_hat
    Vec column_scaling;    ///< per-column scales when standardization was on; empty otherwise
    double bottom_block_deviation = 0.0;  ///< max-abs gap of the discarded [O I] block

    KoopmanModel(MonomialBasis basis_, DelaySpec delays_) : basis(std::move(basis_)), delays(delays_) {}

    Index lifted_dim() const { return basis.size(); }
    int state_dim() const { return delays.state_dim; }
    int input_dim() const { return delays.input_dim; }

    void check_shapes() const {
        const Index N = basis.size();
        const int n = delays.state_dim;
        const int m = delays.input_dim;
        if (A.rows() != N || A.cols() != N) throw std::invalid_argument("KoopmanModel: A must be NxN");
        if (B.rows() != N || B.cols() != m) throw std::invalid_argument("KoopmanModel: B must be Nxm");
        if (C.rows() != n || C.cols() != N) throw std::invalid_argument("KoopmanModel: C must be nxN");
        if (P.rows() != N || P.cols() != N) throw std::invalid_argument("KoopmanModel: P must be NxN");
        if (A_hat.rows() != N || A_hat.cols() != N) throw std::invalid_argument("KoopmanModel: A_hat must be NxN");
        if (B_hat.rows() != N || B_hat.cols() != m) throw std::invalid_argument("KoopmanModel: B_hat must be Nxm");
    }
};

/// The exact output projection [I_n 0].
inline Mat output_projection(int n, Index lifted_dim) {
    Mat C = Mat::Zero(n, lifted_dim);
    C.topLeftCorner(n, n).setIdentity();
    return C;
}

}  // namespace kmpc
