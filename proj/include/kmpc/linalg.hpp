#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <stdexcept>
#include <string>

#include "kmpc/types.hpp"

namespace kmpc {

/// Moore-Penrose pseudoinverse via SVD. Singular values at or below
/// `tolerance * sigma_max` are treated as zero. A negative tolerance
/// selects the default cutoff eps * max(rows, cols).
inline Mat pseudoinverse(const Mat& M, double tolerance = -1.0) {
    if (!M.allFinite()) {
        throw std::invalid_argument("pseudoinverse: input has non-finite entries");
    }
    if (M.size() == 0) {
        return Mat::Zero(M.cols(), M.rows());
    }
    const bool small = std::min(M.rows(), M.cols()) <= 32;
    Eigen::JacobiSVD<Mat> jsvd;
    Eigen::BDCSVD<Mat> bsvd;
    if (small) {
        jsvd.compute(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    } else {
        bsvd.compute(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    }
    const auto& U = small ? jsvd.matrixU() : bsvd.matrixU();
    const auto& V = small ? jsvd.matrixV() : bsvd.matrixV();
    const Vec& sv = small ? jsvd.singularValues() : bsvd.singularValues();
    if ((small ? jsvd.info() : bsvd.info()) != Eigen::Success) {
        throw std::runtime_error("pseudoinverse: SVD failed on a " + std::to_string(M.rows()) +
                                 "x" + std::to_string(M.cols()) + " matrix");
    }

    double tol = tolerance;
    if (tol < 0.0) {
        tol = std::numeric_limits<double>::epsilon() *
              static_cast<double>(std::max(M.rows(), M.cols()));
    }
    const double cutoff = tol * (sv.size() > 0 ? sv[0] : 0.0);

    Vec inv_sv = Vec::Zero(sv.size());
    for (Index i = 0; i < sv.size(); ++i) {
        if (sv[i] > cutoff && sv[i] > 0.0) {
            inv_sv[i] = 1.0 / sv[i];
        }
    }
    return V * inv_sv.asDiagonal() * U.transpose();
}

/// Fraction of exactly nonzero entries.
inline double density(const Mat& M) {
    if (M.size() == 0) return 0.0;
    Index nnz = 0;
    for (Index j = 0; j < M.cols(); ++j) {
        for (Index i = 0; i < M.rows(); ++i) {
            if (M(i, j) != 0.0) ++nnz;
        }
    }
    return static_cast<double>(nnz) / static_cast<double>(M.size());
}

inline double max_abs(const Mat& M) {
    return M.size() == 0 ? 0.0 : M.cwiseAbs().maxCoeff();
}

}  // namespace kmpc
