#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "kmpc/types.hpp"

namespace kmpc {

/// Stage-wise MPC program over the lifted model (A, B):
///
///   min  z[Nh]' G[Nh] z[Nh] + g[Nh]' z[Nh]
///        + sum_{i<Nh} z[i]' G[i] z[i] + u[i]' H[i] u[i] + g[i]' z[i] + h[i]' u[i]
///   s.t. z[i+1] = A z[i] + B u[i]
///        E[i] z[i] + F[i] u[i] <= b[i],  i < Nh
///        z[0] given.
struct MpcProblemSpec {
    Index horizon = 0;   ///< Nh
    Mat A;               ///< N x N lifted dynamics
    Mat B;               ///< N x m
    std::vector<Mat> G;  ///< Nh+1 stage state costs, N x N PSD
    std::vector<Vec> g;  ///< Nh+1 linear state costs
    std::vector<Mat> H;  ///< Nh stage input costs, m x m PSD
    std::vector<Vec> h;  ///< Nh linear input costs
    std::vector<Mat> E;  ///< Nh constraint state maps, c_i x N (c_i may be 0)
    std::vector<Mat> F;  ///< Nh constraint input maps, c_i x m
    std::vector<Vec> b;  ///< Nh constraint bounds

    Index lifted_dim() const { return A.rows(); }
    Index input_dim() const { return B.cols(); }

    /// Symmetrizes the cost matrices in place and rejects genuinely
    /// indefinite ones (eigenvalue < -1e-8). Checks all dimensions.
    void validate() {
        const Index N = A.rows();
        const Index m = B.cols();
        if (horizon < 1) throw std::invalid_argument("MpcProblemSpec: horizon must be >= 1");
        if (A.cols() != N || B.rows() != N) throw std::invalid_argument("MpcProblemSpec: A/B shapes");
        if (static_cast<Index>(G.size()) != horizon + 1 || static_cast<Index>(g.size()) != horizon + 1) {
            throw std::invalid_argument("MpcProblemSpec: need horizon+1 state cost stages");
        }
        if (static_cast<Index>(H.size()) != horizon || static_cast<Index>(h.size()) != horizon) {
            throw std::invalid_argument("MpcProblemSpec: need horizon input cost stages");
        }
        if (static_cast<Index>(E.size()) != horizon || static_cast<Index>(F.size()) != horizon ||
            static_cast<Index>(b.size()) != horizon) {
            throw std::invalid_argument("MpcProblemSpec: need horizon constraint stages");
        }
        auto check_psd = [](Mat& M, const std::string& what) {
            if (M.rows() != M.cols()) throw std::invalid_argument("MpcProblemSpec: " + what + " not square");
            if (M.size() == 0) return;
            M = ((M + M.transpose()) / 2.0).eval();
            Eigen::SelfAdjointEigenSolver<Mat> es(M, Eigen::EigenvaluesOnly);
            if (es.info() != Eigen::Success) {
                throw std::runtime_error("MpcProblemSpec: eigenvalue check failed for " + what);
            }
            if (es.eigenvalues().minCoeff() < -1e-8) {
                throw std::invalid_argument("MpcProblemSpec: " + what + " is indefinite (min eig " +
                                            std::to_string(es.eigenvalues().minCoeff()) + ")");
            }
        };
        for (Index i = 0; i <= horizon; ++i) {
            if (G[i].rows() != N) throw std::invalid_argument("MpcProblemSpec: G size at stage " + std::to_string(i));
            check_psd(G[static_cast<std::size_t>(i)], "G[" + std::to_string(i) + "]");
            if (g[static_cast<std::size_t>(i)].size() != N) {
                throw std::invalid_argument("MpcProblemSpec: g size at stage " + std::to_string(i));
            }
        }
        for (Index i = 0; i < horizon; ++i) {
            if (H[static_cast<std::size_t>(i)].rows() != m) {
                throw std::invalid_argument("MpcProblemSpec: H size at stage " + std::to_string(i));
            }
            check_psd(H[static_cast<std::size_t>(i)], "H[" + std::to_string(i) + "]");
            if (h[static_cast<std::size_t>(i)].size() != m) {
                throw std::invalid_argument("MpcProblemSpec: h size at stage " + std::to_string(i));
            }
            const Index c = E[static_cast<std::size_t>(i)].rows();
            if (E[static_cast<std::size_t>(i)].cols() != N || F[static_cast<std::size_t>(i)].rows() != c ||
                F[static_cast<std::size_t>(i)].cols() != m || b[static_cast<std::size_t>(i)].size() != c) {
                throw std::invalid_argument("MpcProblemSpec: constraint shapes at stage " + std::to_string(i));
            }
        }
    }
};

/// Dense-form QP in the stacked input vector U = [u[0]; ...; u[Nh-1]]:
///   value(U) = U' Q U + q' U + constant,   A_in U <= b_in,
/// with affine recovery z[i] = s[i] + M[i] U. The recovery maps satisfy the
/// dynamics recursion by construction.
struct DenseQp {
    Mat Q;
    Vec q;
    double constant = 0.0;
    Mat A_in;
    Vec b_in;
    std::vector<Vec> s;  ///< free response s[i] = A^i z0
    std::shared_ptr<const std::vector<Mat>> M;  ///< input-to-state maps, shared with the template

    Index vars() const { return Q.rows(); }

    double objective(const Vec& U) const {
        return U.dot(Q * U) + q.dot(U) + constant;
    }

    Vec recover_state(Index stage, const Vec& U) const {
        return s[static_cast<std::size_t>(stage)] + (*M)[static_cast<std::size_t>(stage)] * U;
    }
};

/// Condensation split in two: the structure part (Q, A_in, input-to-state
/// maps), reusable across ticks, and the cheap per-z0 instantiation.
class CondensedMpc {
public:
    explicit CondensedMpc(MpcProblemSpec spec) : spec_(std::move(spec)) {
        spec_.validate();
        const Index N = spec_.lifted_dim();
        const Index m = spec_.input_dim();
        const Index Nh = spec_.horizon;
        nu_ = Nh * m;

        std::vector<Mat> powers(static_cast<std::size_t>(Nh));  // powers[k] = A^k B
        powers[0] = spec_.B;
        for (Index k = 1; k < Nh; ++k) {
            powers[static_cast<std::size_t>(k)] = spec_.A * powers[static_cast<std::size_t>(k - 1)];
        }

        auto maps = std::make_shared<std::vector<Mat>>(static_cast<std::size_t>(Nh + 1));
        (*maps)[0] = Mat::Zero(N, nu_);
        for (Index i = 1; i <= Nh; ++i) {
            Mat& Mi = (*maps)[static_cast<std::size_t>(i)];
            Mi = Mat::Zero(N, nu_);
            for (Index j = 0; j < i; ++j) {
                Mi.middleCols(j * m, m) = powers[static_cast<std::size_t>(i - 1 - j)];
            }
        }
        maps_ = std::move(maps);

        Q_ = Mat::Zero(nu_, nu_);
        for (Index i = 1; i <= Nh; ++i) {
            const Mat& Gi = spec_.G[static_cast<std::size_t>(i)];
            if (Gi.cwiseAbs().maxCoeff() == 0.0) continue;
            const Mat& Mi = (*maps_)[static_cast<std::size_t>(i)];
            Q_.noalias() += Mi.transpose() * (Gi * Mi);
        }
        for (Index i = 0; i < Nh; ++i) {
            Q_.block(i * m, i * m, m, m) += spec_.H[static_cast<std::size_t>(i)];
        }
        Q_ = ((Q_ + Q_.transpose()) / 2.0).eval();

        Index total_c = 0;
        for (Index i = 0; i < Nh; ++i) total_c += spec_.E[static_cast<std::size_t>(i)].rows();
        A_in_ = Mat::Zero(total_c, nu_);
        Index at = 0;
        for (Index i = 0; i < Nh; ++i) {
            const Mat& Ei = spec_.E[static_cast<std::size_t>(i)];
            const Index c = Ei.rows();
            if (c == 0) continue;
            if (Ei.cwiseAbs().maxCoeff() != 0.0) {
                A_in_.middleRows(at, c).noalias() = Ei * (*maps_)[static_cast<std::size_t>(i)];
            }
            A_in_.block(at, i * m, c, m) += spec_.F[static_cast<std::size_t>(i)];
            at += c;
        }
    }

    const MpcProblemSpec& spec() const { return spec_; }
    Index vars() const { return nu_; }

    /// Builds the per-tick dense QP. Optional overrides swap the linear cost
    /// terms and constraint bounds without touching the validated structure
    /// (the receding-horizon path updates the reference window this way).
    DenseQp instantiate(const Vec& z0, const std::vector<Vec>* g_override = nullptr,
                        const std::vector<Vec>* h_override = nullptr,
                        const std::vector<Vec>* b_override = nullptr) const {
        const Index N = spec_.lifted_dim();
        const Index m = spec_.input_dim();
        const Index Nh = spec_.horizon;
        if (z0.size() != N) {
            throw std::invalid_argument("CondensedMpc: z0 has dimension " + std::to_string(z0.size()) +
                                        ", expected " + std::to_string(N));
        }
        const auto& g = g_override != nullptr ? *g_override : spec_.g;
        const auto& h = h_override != nullptr ? *h_override : spec_.h;
        const auto& b = b_override != nullptr ? *b_override : spec_.b;
        if (static_cast<Index>(g.size()) != Nh + 1 || static_cast<Index>(h.size()) != Nh ||
            static_cast<Index>(b.size()) != Nh) {
            throw std::invalid_argument("CondensedMpc: override stage counts");
        }

        DenseQp qp;
        qp.Q = Q_;
        qp.M = maps_;
        qp.s.resize(static_cast<std::size_t>(Nh + 1));
        qp.s[0] = z0;
        for (Index i = 0; i < Nh; ++i) {
            qp.s[static_cast<std::size_t>(i + 1)].noalias() = spec_.A * qp.s[static_cast<std::size_t>(i)];
        }

        qp.q = Vec::Zero(nu_);
        qp.constant = 0.0;
        for (Index i = 0; i <= Nh; ++i) {
            const Vec& si = qp.s[static_cast<std::size_t>(i)];
            const Mat& Gi = spec_.G[static_cast<std::size_t>(i)];
            Vec Gs = Gi * si;
            qp.constant += si.dot(Gs) + g[static_cast<std::size_t>(i)].dot(si);
            if (i >= 1) {
                qp.q.noalias() += (*maps_)[static_cast<std::size_t>(i)].transpose() *
                                  (2.0 * Gs + g[static_cast<std::size_t>(i)]);
            }
        }
        for (Index i = 0; i < Nh; ++i) {
            qp.q.segment(i * m, m) += h[static_cast<std::size_t>(i)];
        }

        qp.A_in = A_in_;
        qp.b_in.resize(A_in_.rows());
        Index at = 0;
        for (Index i = 0; i < Nh; ++i) {
            const Mat& Ei = spec_.E[static_cast<std::size_t>(i)];
            const Index c = Ei.rows();
            if (c == 0) continue;
            qp.b_in.segment(at, c) = b[static_cast<std::size_t>(i)];
            if (Ei.cwiseAbs().maxCoeff() != 0.0) {
                qp.b_in.segment(at, c).noalias() -= Ei * qp.s[static_cast<std::size_t>(i)];
            }
            at += c;
        }
        return qp;
    }

private:
    MpcProblemSpec spec_;
    Index nu_ = 0;
    Mat Q_;
    Mat A_in_;
    std::shared_ptr<const std::vector<Mat>> maps_;
};

/// One-shot condensation: eliminates the states via the dynamics and returns
/// the dense QP in the stacked inputs only.
inline DenseQp condense(MpcProblemSpec spec, const Vec& z0) {
    return CondensedMpc(std::move(spec)).instantiate(z0);
}

enum class QpStatus { optimal, max_iter, infeasible };

inline const char* to_string(QpStatus s) {
    switch (s) {
        case QpStatus::optimal: return "optimal";
        case QpStatus::max_iter: return "max-iter";
        case QpStatus::infeasible: return "infeasible";
    }
    return "unknown";
}

struct QpSolution {
    Vec U;
    Vec dual;                     ///< multipliers for A_in U <= b_in, >= 0
    double objective = 0.0;
    double primal_residual = 0.0; ///< max constraint violation
    double dual_residual = 0.0;   ///< stationarity gap ||2QU + q + A'y||_inf
    double comp_slack = 0.0;      ///< max |y_i (A_in U - b_in)_i|
    int iterations = 0;
    QpStatus status = QpStatus::max_iter;
    bool polished = false;
};

struct QpSolverOptions {
    double tol = 1e-6;
    int max_iter = 4000;
    double rho = 1.0;        ///< initial ADMM penalty
    double sigma = 1e-6;     ///< proximal regularization
    double alpha = 1.6;      ///< over-relaxation
    /// Residual-balancing rho updates. Fixed rho (= false) stalls on
    /// near-degenerate constraint geometry, so balancing is the default;
    /// the schedule is fixed either way, so solves stay deterministic.
    bool adaptive_rho = true;
    bool polish = true;      ///< active-set KKT refinement of the converged iterate
    int check_interval = 5;
};

struct QpWarmStart {
    Vec U;
    Vec dual;
};

namespace detail {

inline void kkt_residuals(const DenseQp& qp, const Vec& U, const Vec& y, double& primal,
                          double& dual, double& comp) {
    const Vec slack = qp.A_in.rows() > 0 ? Vec(qp.A_in * U - qp.b_in) : Vec();
    primal = slack.size() > 0 ? std::max(0.0, slack.maxCoeff()) : 0.0;
    Vec grad = 2.0 * (qp.Q * U) + qp.q;
    if (qp.A_in.rows() > 0) grad.noalias() += qp.A_in.transpose() * y;
    dual = grad.size() > 0 ? grad.cwiseAbs().maxCoeff() : 0.0;
    comp = 0.0;
    for (Index i = 0; i < slack.size(); ++i) {
        comp = std::max(comp, std::abs(y[i] * slack[i]));
    }
}

/// Solves the equality KKT system on one candidate active set; returns true
/// only when the result is a certified optimum.
inline bool try_active_set(const DenseQp& qp, const QpSolverOptions& opt,
                           const std::vector<Index>& active, Vec& U, Vec& y) {
    const Index nc = qp.A_in.rows();
    const Index na = static_cast<Index>(active.size());
    const Index n = qp.vars();
    if (na > n) return false;
    Mat kkt = Mat::Zero(n + na, n + na);
    kkt.topLeftCorner(n, n) = 2.0 * qp.Q;
    Vec rhs(n + na);
    rhs.head(n) = -qp.q;
    for (Index a = 0; a < na; ++a) {
        kkt.block(n + a, 0, 1, n) = qp.A_in.row(active[static_cast<std::size_t>(a)]);
        kkt.block(0, n + a, n, 1) = qp.A_in.row(active[static_cast<std::size_t>(a)]).transpose();
        rhs[n + a] = qp.b_in[active[static_cast<std::size_t>(a)]];
    }
    Eigen::FullPivLU<Mat> lu(kkt);
    if (!lu.isInvertible()) return false;
    const Vec sol = lu.solve(rhs);

    Vec U_new = sol.head(n);
    Vec y_new = Vec::Zero(nc);
    for (Index a = 0; a < na; ++a) {
        y_new[active[static_cast<std::size_t>(a)]] = std::max(0.0, sol[n + a]);
    }
    double primal = 0.0, dual = 0.0, comp = 0.0;
    kkt_residuals(qp, U_new, y_new, primal, dual, comp);
    if (primal <= opt.tol && dual <= opt.tol && comp <= opt.tol) {
        U = std::move(U_new);
        y = std::move(y_new);
        return true;
    }
    return false;
}

/// Active-set refinement. The activity threshold is swept over a ladder so a
/// roughly-converged iterate still identifies a certifiable active set.
inline bool polish(const DenseQp& qp, const QpSolverOptions& opt, Vec& U, Vec& y) {
    const Index nc = qp.A_in.rows();
    const Vec slack = nc > 0 ? Vec(qp.A_in * U - qp.b_in) : Vec();
    const double base = std::max(10.0 * opt.tol, 1e-7);
    for (const double mult : {1.0, 1e2, 1e4, 1e6}) {
        const double act_tol = base * mult;
        std::vector<Index> active;
        for (Index i = 0; i < nc; ++i) {
            if (slack[i] > -act_tol || y[i] > act_tol) active.push_back(i);
        }
        if (try_active_set(qp, opt, active, U, y)) return true;
    }
    return false;
}

}  // namespace detail

/// Operator-splitting (ADMM) solve of the dense QP with optional warm start
/// and active-set polishing. Deterministic: fixed iteration schedule, no
/// randomized pivoting. Optimal status requires explicit KKT residuals
/// (stationarity, primal feasibility, complementary slackness) within tol.
inline QpSolution solve_qp(const DenseQp& qp, const QpSolverOptions& opt = {},
                           const QpWarmStart* warm = nullptr) {
    const Index n = qp.vars();
    const Index nc = qp.A_in.rows();
    if (qp.q.size() != n) throw std::invalid_argument("solve_qp: q size mismatch");
    if (nc > 0 && qp.b_in.size() != nc) throw std::invalid_argument("solve_qp: b_in size mismatch");

    QpSolution out;
    const Mat P = 2.0 * qp.Q;

    if (nc == 0) {
        // Unconstrained: minimum-norm stationary point via the pseudoinverse.
        Eigen::JacobiSVD<Mat> svd(P, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const double cutoff = std::numeric_limits<double>::epsilon() * static_cast<double>(n) *
                              (svd.singularValues().size() > 0 ? svd.singularValues()[0] : 0.0);
        Vec inv = Vec::Zero(svd.singularValues().size());
        for (Index i = 0; i < inv.size(); ++i) {
            if (svd.singularValues()[i] > cutoff) inv[i] = 1.0 / svd.singularValues()[i];
        }
        out.U = -(svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose() * qp.q);
        out.dual = Vec();
        out.iterations = 0;
        detail::kkt_residuals(qp, out.U, out.dual, out.primal_residual, out.dual_residual,
                              out.comp_slack);
        out.objective = qp.objective(out.U);
        out.status = out.dual_residual <= opt.tol ? QpStatus::optimal : QpStatus::max_iter;
        return out;
    }

    double rho = opt.rho;
    Vec x = warm != nullptr && warm->U.size() == n ? warm->U : Vec::Zero(n);
    Vec y = warm != nullptr && warm->dual.size() == nc ? warm->dual : Vec::Zero(nc);
    Vec z = (qp.A_in * x).cwiseMin(qp.b_in);

    Mat kkt = P + opt.sigma * Mat::Identity(n, n) + rho * qp.A_in.transpose() * qp.A_in;
    Eigen::LDLT<Mat> factor(kkt);
    auto refactor = [&]() {
        kkt = P + opt.sigma * Mat::Identity(n, n) + rho * qp.A_in.transpose() * qp.A_in;
        factor.compute(kkt);
    };

    Vec y_prev = y;
    int it = 0;
    bool infeasible = false;
    while (it < opt.max_iter) {
        ++it;
        const Vec rhs = opt.sigma * x - qp.q + qp.A_in.transpose() * (rho * z - y);
        const Vec x_tilde = factor.solve(rhs);
        const Vec Ax_tilde = qp.A_in * x_tilde;
        x = opt.alpha * x_tilde + (1.0 - opt.alpha) * x;
        const Vec z_relaxed = opt.alpha * Ax_tilde + (1.0 - opt.alpha) * z;
        const Vec z_new = (z_relaxed + y / rho).cwiseMin(qp.b_in);
        y += rho * (z_relaxed - z_new);
        z = z_new;

        if (it % opt.check_interval == 0 || it == opt.max_iter) {
            const Vec Ax = qp.A_in * x;
            const double r_prim = (Ax - z).cwiseAbs().maxCoeff();
            Vec grad = P * x + qp.q + qp.A_in.transpose() * y;
            const double r_dual = grad.cwiseAbs().maxCoeff();
            if (r_prim <= opt.tol && r_dual <= opt.tol) {
                break;
            }
            // Primal-infeasibility certificate: a nonnegative ray v with
            // A' v ~ 0 and b' v < 0 proves the constraints are inconsistent.
            const Vec dy = y - y_prev;
            const double dy_norm = dy.cwiseAbs().maxCoeff();
            if (dy_norm > 1e-12) {
                const Vec v = dy / dy_norm;
                const bool nonneg = (v.array() >= -1e-8).all();
                const double atv = (qp.A_in.transpose() * v).cwiseAbs().maxCoeff();
                const double btv = qp.b_in.dot(v);
                if (nonneg && atv <= 1e-8 && btv < -1e-8) {
                    infeasible = true;
                    break;
                }
            }
            y_prev = y;
            if (opt.adaptive_rho) {
                const double ratio = std::sqrt((r_prim + 1e-16) / (r_dual + 1e-16));
                if (ratio > 5.0 || ratio < 0.2) {
                    rho = std::clamp(rho * ratio, 1e-6, 1e6);
                    refactor();
                }
            }
        }
    }

    out.U = x;
    out.dual = y.cwiseMax(0.0);
    out.iterations = it;
    if (infeasible) {
        out.status = QpStatus::infeasible;
        out.objective = qp.objective(out.U);
        detail::kkt_residuals(qp, out.U, out.dual, out.primal_residual, out.dual_residual,
                              out.comp_slack);
        return out;
    }

    if (opt.polish) {
        Vec U_p = out.U;
        Vec y_p = out.dual;
        if (detail::polish(qp, opt, U_p, y_p)) {
            out.U = std::move(U_p);
            out.dual = std::move(y_p);
            out.polished = true;
        }
    }
    detail::kkt_residuals(qp, out.U, out.dual, out.primal_residual, out.dual_residual,
                          out.comp_slack);
    out.objective = qp.objective(out.U);
    const bool kkt_ok = out.primal_residual <= opt.tol && out.dual_residual <= opt.tol &&
                        out.comp_slack <= opt.tol;
    out.status = kkt_ok ? QpStatus::optimal : QpStatus::max_iter;
    return out;
}

}  // namespace kmpc
