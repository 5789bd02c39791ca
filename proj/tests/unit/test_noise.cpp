#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "kmpc/noise.hpp"

using kmpc::characterize_noise;
using kmpc::Rng;
using kmpc::Vec;

TEST_CASE("noiseless plant has zero spread") {
    kmpc::ArmSurrogateParams params;
    params.noise_std = 0.0;
    const kmpc::PlantSpec plant = kmpc::arm_surrogate_plant(params);
    Rng rng(41);
    // Enough skip periods for the deterministic transient to die out.
    const auto report = characterize_noise(plant, {6.0}, 3, 0.1, rng, 6);
    CHECK(report.spread_std < 1e-12);
    CHECK(report.max_deviation < 1e-11);
}

TEST_CASE("measured spread matches a Monte-Carlo propagation of sigma") {
    const double sigma = 0.01;
    kmpc::ArmSurrogateParams params;
    params.noise_std = sigma;
    const kmpc::PlantSpec plant = kmpc::arm_surrogate_plant(params);
    Rng rng(42);
    const int periods = 24;
    const auto report = characterize_noise(plant, {6.0}, periods, 0.1, rng);

    // Oracle: deviations are the measurement noise minus its per-index mean
    // over the periods; propagate sigma through that subtraction by direct
    // Monte-Carlo with 10x the periods.
    Rng oracle_rng(43);
    std::normal_distribution<double> gauss(0.0, sigma);
    const int oracle_periods = periods * 10;
    const int steps = 60;
    std::vector<double> dists;
    for (int j = 0; j < steps; ++j) {
        std::vector<Eigen::Vector2d> eps(static_cast<std::size_t>(oracle_periods));
        Eigen::Vector2d mean = Eigen::Vector2d::Zero();
        for (auto& e : eps) {
            e = {gauss(oracle_rng), gauss(oracle_rng)};
            mean += e;
        }
        mean /= static_cast<double>(oracle_periods);
        for (const auto& e : eps) dists.push_back((e - mean).norm());
    }
    double m = 0.0;
    for (const double d : dists) m += d;
    m /= static_cast<double>(dists.size());
    double var = 0.0;
    for (const double d : dists) var += (d - m) * (d - m);
    const double oracle_std = std::sqrt(var / static_cast<double>(dists.size() - 1));

    CHECK(report.spread_std == Catch::Approx(oracle_std).epsilon(0.2));
}

TEST_CASE("most deviations sit within two standard deviations of the mean") {
    kmpc::ArmSurrogateParams params;
    params.noise_std = 0.005;
    const kmpc::PlantSpec plant = kmpc::arm_surrogate_plant(params);
    Rng rng(44);
    const auto report = characterize_noise(plant, {6.0, 8.0, 10.0}, 12, 0.1, rng);
    CHECK(report.fraction_within_two_std >= 0.90);
    CHECK(report.fraction_within_two_std <= 0.999);
    CHECK(report.max_deviation > report.spread_mean);
}

TEST_CASE("characterize_noise validates its inputs") {
    const kmpc::PlantSpec plant = kmpc::arm_surrogate_plant();
    Rng rng(45);
    CHECK_THROWS_AS(characterize_noise(plant, {6.0}, 1, 0.1, rng), std::invalid_argument);
    CHECK_THROWS_AS(characterize_noise(plant, {}, 3, 0.1, rng), std::invalid_argument);
}
