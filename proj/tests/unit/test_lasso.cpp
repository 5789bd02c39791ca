#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "kmpc/lasso.hpp"
#include "kmpc/linalg.hpp"
#include "../support/oracles.hpp"

using kmpc::lasso_gram;
using kmpc::LassoOptions;
using kmpc::Mat;
using kmpc::pseudoinverse;
using kmpc::Vec;

namespace {

double lasso_objective(const Mat& A, const Mat& B, const Mat& U, double lambda) {
    return (A * U - B).squaredNorm() + lambda * U.cwiseAbs().sum();
}

Mat random_matrix(kmpc::Index rows, kmpc::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Mat M(rows, cols);
    for (kmpc::Index i = 0; i < rows; ++i) {
        for (kmpc::Index j = 0; j < cols; ++j) M(i, j) = gauss(rng);
    }
    return M;
}

}  // namespace

TEST_CASE("lambda = 0 coordinate descent matches least squares") {
    std::mt19937_64 rng(11);
    const Mat A = random_matrix(40, 6, rng);
    const Mat B = random_matrix(40, 4, rng);
    const Mat U_ls = pseudoinverse(A) * B;

    LassoOptions opt;
    opt.tol = 1e-10;
    opt.max_iter = 100000;
    const auto sol = lasso_gram(A.transpose() * A, A.transpose() * B, 0.0, opt);
    REQUIRE(sol.converged);
    CHECK((sol.coefficients - U_ls).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("lambda above the zero-threshold bound yields exactly zero") {
    std::mt19937_64 rng(12);
    const Mat A = random_matrix(30, 5, rng);
    const Mat B = random_matrix(30, 3, rng);
    const double bound = 2.0 * (A.transpose() * B).cwiseAbs().maxCoeff();

    const auto sol = lasso_gram(A.transpose() * A, A.transpose() * B, bound * 1.0001, {});
    REQUIRE(sol.converged);
    CHECK(sol.coefficients.cwiseAbs().maxCoeff() == 0.0);

    // Verified against brute force on a scalar instance.
    const Vec a = A.col(0);
    const Vec b = B.col(0);
    const double scalar_bound = 2.0 * std::abs(a.dot(b));
    const double u_grid = oracles::scalar_lasso_grid(a, b, scalar_bound * 1.01);
    CHECK(std::abs(u_grid) < 1e-3);
}

TEST_CASE("scalar problems match the closed-form soft threshold") {
    std::mt19937_64 rng(13);
    for (int rep = 0; rep < 20; ++rep) {
        Vec a = random_matrix(25, 1, rng).col(0);
        a.normalize();  // unit-norm design column
        const Vec b = random_matrix(25, 1, rng).col(0);
        const double lambda = 0.3 * (rep + 1) / 4.0;

        const double z = a.dot(b);
        const double expected = kmpc::detail::soft_threshold(z, lambda / 2.0);

        Mat gram(1, 1), corr(1, 1);
        gram << 1.0;
        corr << z;
        const auto sol = lasso_gram(gram, corr, lambda, {});
        REQUIRE(sol.converged);
        CHECK(sol.coefficients(0, 0) == Catch::Approx(expected).margin(1e-8));

        // Independent grid-search oracle.
        const double u_grid = oracles::scalar_lasso_grid(a, b, lambda);
        CHECK(sol.coefficients(0, 0) == Catch::Approx(u_grid).margin(1e-3));
    }
}

TEST_CASE("objective sanity bounds") {
    std::mt19937_64 rng(14);
    const Mat A = random_matrix(50, 8, rng);
    const Mat B = random_matrix(50, 8, rng);
    const Mat U_ls = pseudoinverse(A) * B;
    for (const double lambda : {0.5, 2.0, 10.0}) {
        const auto sol = lasso_gram(A.transpose() * A, A.transpose() * B, lambda, {});
        const double value = lasso_objective(A, B, sol.coefficients, lambda);
        CHECK(value <= lasso_objective(A, B, U_ls, lambda) + 1e-9);
        CHECK(value <= lasso_objective(A, B, Mat::Zero(8, 8), lambda) + 1e-9);
    }
}

TEST_CASE("weak monotonicity of the nonzero count in lambda") {
    std::mt19937_64 rng(15);
    const Mat A = random_matrix(60, 10, rng);
    const Mat B = random_matrix(60, 10, rng);
    const Mat gram = A.transpose() * A;
    const Mat corr = A.transpose() * B;

    auto nonzeros = [](const Mat& U) {
        kmpc::Index count = 0;
        for (kmpc::Index j = 0; j < U.cols(); ++j) {
            for (kmpc::Index i = 0; i < U.rows(); ++i) {
                if (U(i, j) != 0.0) ++count;
            }
        }
        return count;
    };

    kmpc::Index prev = 10 * 10 + 1;
    const double slack = 0.01 * 100;  // 1% of entries
    for (const double lambda : {0.1, 0.5, 1.0, 3.0, 8.0, 20.0, 60.0}) {
        const auto sol = lasso_gram(gram, corr, lambda, {});
        const kmpc::Index count = nonzeros(sol.coefficients);
        CHECK(static_cast<double>(count) <= static_cast<double>(prev) + slack);
        prev = count;
    }
}

TEST_CASE("warm starts reach the same solution") {
    std::mt19937_64 rng(16);
    const Mat A = random_matrix(40, 6, rng);
    const Mat B = random_matrix(40, 6, rng);
    const Mat gram = A.transpose() * A;
    const Mat corr = A.transpose() * B;

    LassoOptions opt;
    opt.tol = 1e-10;
    const auto cold = lasso_gram(gram, corr, 1.5, opt);
    const auto warm_source = lasso_gram(gram, corr, 3.0, opt);
    const auto warm = lasso_gram(gram, corr, 1.5, opt, &warm_source.coefficients);
    CHECK((cold.coefficients - warm.coefficients).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("invalid arguments are rejected") {
    Mat gram = Mat::Identity(2, 2);
    Mat corr = Mat::Ones(2, 2);
    CHECK_THROWS_AS(lasso_gram(gram, corr, -1.0, {}), std::invalid_argument);
    CHECK_THROWS_AS(lasso_gram(Mat::Ones(2, 3), corr, 1.0, {}), std::invalid_argument);
}
