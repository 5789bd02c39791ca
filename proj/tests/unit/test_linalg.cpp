#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "kmpc/linalg.hpp"

using kmpc::Mat;
using kmpc::pseudoinverse;

TEST_CASE("pseudoinverse of the identity") {
    const Mat I = Mat::Identity(3, 3);
    CHECK((pseudoinverse(I) - I).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("pseudoinverse of a rank-deficient diagonal") {
    Mat D = Mat::Zero(2, 2);
    D(0, 0) = 2.0;
    const Mat Dp = pseudoinverse(D);
    CHECK(Dp(0, 0) == Catch::Approx(0.5).margin(1e-14));
    CHECK(Dp(0, 1) == 0.0);
    CHECK(Dp(1, 0) == 0.0);
    CHECK(Dp(1, 1) == 0.0);
}

TEST_CASE("Penrose conditions on random full-rank matrices") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int rep = 0; rep < 10; ++rep) {
        Mat M(5, 3);
        for (int i = 0; i < 5; ++i) {
            for (int j = 0; j < 3; ++j) M(i, j) = gauss(rng);
        }
        const Mat Mp = pseudoinverse(M);
        CHECK((M * Mp * M - M).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((Mp * M * Mp - Mp).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(((M * Mp) - (M * Mp).transpose()).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(((Mp * M) - (Mp * M).transpose()).cwiseAbs().maxCoeff() < 1e-10);
        // Full column rank: left inverse.
        CHECK((Mp * M - Mat::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("pseudoinverse rejects non-finite input") {
    Mat M = Mat::Ones(2, 2);
    M(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(pseudoinverse(M), std::invalid_argument);
}

TEST_CASE("density counts exact nonzeros") {
    Mat M = Mat::Zero(2, 2);
    M(0, 0) = 1.0;
    M(1, 1) = -3.5;
    CHECK(kmpc::density(M) == Catch::Approx(0.5));
    CHECK(kmpc::density(Mat::Zero(3, 3)) == 0.0);
    CHECK(kmpc::density(Mat::Ones(3, 3)) == 1.0);
}
