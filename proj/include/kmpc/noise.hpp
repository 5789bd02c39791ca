#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "kmpc/plants.hpp"
#include "kmpc/signals.hpp"
#include "kmpc/types.hpp"

namespace kmpc {

/// Period-to-period variability under repeated sinusoid excitation: per-T
/// mean trajectories plus the pooled distribution of pointwise distances
/// from the mean.
struct NoiseReport {
    std::vector<double> periods;
    std::vector<Mat> mean_trajectories;  ///< per T: (steps x n) mean over periods
    Vec deviations;                      ///< pooled pointwise distances from the mean
    double spread_mean = 0.0;
    double spread_std = 0.0;
    double max_deviation = 0.0;
    double fraction_within_two_std = 1.0;  ///< distances <= mean + 2 std
};

/// Runs the stochasticity-characterization experiment: for each period T,
/// drives the plant with the three-phase sinusoid for `skip_periods`
/// transient periods plus `periods_per_T` measured ones, superimposes the
/// measured periods, and aggregates the distances from the per-T mean.
inline NoiseReport characterize_noise(const PlantSpec& plant, const std::vector<double>& periods,
                                      int periods_per_T, double T_s, Rng& rng,
                                      int skip_periods = 2) {
    if (periods_per_T < 2) {
        throw std::invalid_argument("characterize_noise: need at least 2 periods per T");
    }
    if (periods.empty()) {
        throw std::invalid_argument("characterize_noise: empty period list");
    }
    plant.validate();

    NoiseReport report;
    report.periods = periods;
    std::vector<double> pooled;

    for (const double T : periods) {
        const Index steps = static_cast<Index>(std::llround(T / T_s));
        if (steps < 2) {
            throw std::invalid_argument("characterize_noise: period too short for T_s");
        }
        const int total = skip_periods + periods_per_T;
        const double duration = static_cast<double>(total) * static_cast<double>(steps) * T_s;
        Trial trial = simulate_trial(
            plant, [&](double, Index k) { return sinusoid_inputs(T, T_s, k); }, duration, T_s, rng,
            "noise-T" + std::to_string(T));

        Mat mean = Mat::Zero(steps, plant.output_dim());
        for (int p = 0; p < periods_per_T; ++p) {
            const Index start = static_cast<Index>(skip_periods + p) * steps;
            mean += trial.states.middleRows(start, steps);
        }
        mean /= static_cast<double>(periods_per_T);
        report.mean_trajectories.push_back(mean);

        for (int p = 0; p < periods_per_T; ++p) {
            const Index start = static_cast<Index>(skip_periods + p) * steps;
            for (Index j = 0; j < steps; ++j) {
                pooled.push_back((trial.states.row(start + j) - mean.row(j)).norm());
            }
        }
    }

    report.deviations = Eigen::Map<Vec>(pooled.data(), static_cast<Index>(pooled.size()));
    const Index pts = report.deviations.size();
    report.spread_mean = report.deviations.mean();
    double var = 0.0;
    for (Index i = 0; i < pts; ++i) {
        const double d = report.deviations[i] - report.spread_mean;
        var += d * d;
    }
    report.spread_std = pts > 1 ? std::sqrt(var / static_cast<double>(pts - 1)) : 0.0;
    report.max_deviation = report.deviations.maxCoeff();
    const double band = report.spread_mean + 2.0 * report.spread_std;
    Index within = 0;
    for (Index i = 0; i < pts; ++i) {
        if (report.deviations[i] <= band) ++within;
    }
    report.fraction_within_two_std = static_cast<double>(within) / static_cast<double>(pts);
    return report;
}

}  // namespace kmpc
