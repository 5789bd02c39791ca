#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>
#include <vector>

#include "kmpc/types.hpp"

namespace kmpc {

struct LassoOptions {
    double tol = 1e-6;        ///< convergence threshold on the max coordinate change per sweep
    int max_iter = 10000;     ///< sweep cap per column
    int threads = 0;          ///< 0 selects hardware concurrency
};

struct LassoSolution {
    Mat coefficients;  ///< p x t, column j solves the LASSO for target column j
    bool converged = true;
    int max_sweeps = 0;  ///< largest sweep count used by any column
};

namespace detail {

inline double soft_threshold(double z, double gamma) {
    if (z > gamma) return z - gamma;
    if (z < -gamma) return z + gamma;
    return 0.0;
}

// Cyclic coordinate descent on one column: minimizes
//   ||A u - b||^2 + lambda * ||u||_1
// given gram = A^T A and corr = A^T b. Maintains g = gram * u.
inline void lasso_column(const Mat& gram, const Vec& corr, double lambda, const LassoOptions& opt,
                         Vec& u, bool& converged, int& sweeps) {
    const Index p = gram.rows();
    const double gamma = 0.5 * lambda;
    Vec g = gram * u;

    converged = false;
    sweeps = 0;
    while (sweeps < opt.max_iter) {
        ++sweeps;
        double max_delta = 0.0;
        for (Index i = 0; i < p; ++i) {
            const double gii = gram(i, i);
            double u_new = 0.0;
            if (gii > 0.0) {
                const double z = corr[i] - (g[i] - gii * u[i]);
                u_new = detail::soft_threshold(z, gamma) / gii;
            }
            const double delta = u_new - u[i];
            if (delta != 0.0) {
                g += delta * gram.col(i);
                u[i] = u_new;
                max_delta = std::max(max_delta, std::abs(delta));
            }
        }
        if (max_delta < opt.tol) {
            converged = true;
            break;
        }
    }
}

}  // namespace detail

/// Solves min_U ||A U - B||_F^2 + lambda * ||vec(U)||_1 from the precomputed
/// Gram matrix gram = A^T A and correlations corr = A^T B. The problem
/// separates column-wise; columns run in parallel and the assembly order is
/// fixed, so results are deterministic. `warm`, when given, seeds the
/// iteration (useful along a lambda path).
inline LassoSolution lasso_gram(const Mat& gram, const Mat& corr, double lambda,
                                const LassoOptions& opt = {}, const Mat* warm = nullptr) {
    if (gram.rows() != gram.cols()) {
        throw std::invalid_argument("lasso_gram: gram matrix must be square");
    }
    if (corr.rows() != gram.rows()) {
        throw std::invalid_argument("lasso_gram: corr row count must match gram");
    }
    if (lambda < 0.0) {
        throw std::invalid_argument("lasso_gram: lambda must be >= 0");
    }
    if (warm != nullptr && (warm->rows() != gram.rows() || warm->cols() != corr.cols())) {
        throw std::invalid_argument("lasso_gram: warm start has wrong shape");
    }

    const Index p = gram.rows();
    const Index t = corr.cols();
    LassoSolution out;
    out.coefficients = warm != nullptr ? *warm : Mat::Zero(p, t);

    std::vector<char> col_converged(static_cast<std::size_t>(t), 1);
    std::vector<int> col_sweeps(static_cast<std::size_t>(t), 0);

    auto run_range = [&](Index begin, Index end) {
        for (Index j = begin; j < end; ++j) {
            Vec u = out.coefficients.col(j);
            bool conv = false;
            int sweeps = 0;
            detail::lasso_column(gram, corr.col(j), lambda, opt, u, conv, sweeps);
            out.coefficients.col(j) = u;
            col_converged[static_cast<std::size_t>(j)] = conv ? 1 : 0;
            col_sweeps[static_cast<std::size_t>(j)] = sweeps;
        }
    };

    int threads = opt.threads > 0 ? opt.threads
                                  : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min<int>(threads, static_cast<int>(t)));
    if (threads == 1) {
        run_range(0, t);
    } else {
        std::vector<std::thread> pool;
        const Index chunk = (t + threads - 1) / threads;
        for (int w = 0; w < threads; ++w) {
            const Index begin = w * chunk;
            const Index end = std::min<Index>(t, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(run_range, begin, end);
        }
        for (auto& th : pool) th.join();
    }

    out.converged = std::all_of(col_converged.begin(), col_converged.end(),
                                [](char c) { return c != 0; });
    out.max_sweeps = *std::max_element(col_sweeps.begin(), col_sweeps.end());
    return out;
}

}  // namespace kmpc
