#pragma once

#include <cmath>
#include <random>
#include <stdexcept>

#include "kmpc/types.hpp"

namespace kmpc {

using Rng = std::mt19937_64;

/// Three-phase sinusoid command at step k: channel i is
/// 6 sin(2*pi/T * (k*T_s - (i-1)*T/3)) + 3, i.e. the channels are cyclic
/// shifts by one third of a period. Values are returned unclipped; the
/// plant's saturation box mirrors the regulator limits.
inline Vec sinusoid_inputs(double T, double T_s, Index k) {
    if (!(T > 0.0) || !(T_s > 0.0)) {
        throw std::invalid_argument("sinusoid_inputs: T and T_s must be > 0");
    }
    Vec u(3);
    const double t = static_cast<double>(k) * T_s;
    for (int i = 0; i < 3; ++i) {
        u[i] = 6.0 * std::sin(2.0 * M_PI / T * (t - static_cast<double>(i) * T / 3.0)) + 3.0;
    }
    return u;
}

/// Uniform random lookup table in [lo, hi], one row per channel.
inline Mat make_ramp_table(Index channels, Index length, Rng& rng, double lo = 0.0,
                           double hi = 10.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Mat table(channels, length);
    for (Index i = 0; i < channels; ++i) {
        for (Index k = 0; k < length; ++k) {
            table(i, k) = dist(rng);
        }
    }
    return table;
}

/// Piecewise-linear ramp through the lookup table columns, one transition
/// per T_u seconds. Channel i runs on the shifted clock t - i*T_u/3; the
/// table is front-padded (first column repeated) so shifted channels are
/// defined near t = 0. Output stays inside the table's value range.
inline Vec ramp_inputs(const Mat& table, double T_u, double t) {
    if (!(T_u > 0.0)) {
        throw std::invalid_argument("ramp_inputs: T_u must be > 0");
    }
    const Index L = table.cols();
    if (L < 2) {
        throw std::invalid_argument("ramp_inputs: table needs at least two columns");
    }
    const double span = static_cast<double>(L - 1) * T_u;
    if (t < 0.0 || t > span * (1.0 + 1e-12)) {
        throw std::out_of_range("ramp_inputs: t outside the table span");
    }
    Vec u(table.rows());
    for (Index i = 0; i < table.rows(); ++i) {
        double tau = t - static_cast<double>(i) * T_u / 3.0;
        if (tau < 0.0) tau = 0.0;  // front padding
        Index k = static_cast<Index>(std::floor(tau / T_u));
        if (k >= L - 1) {
            u[i] = table(i, L - 1);
            continue;
        }
        const double frac = (tau - static_cast<double>(k) * T_u) / T_u;
        u[i] = (1.0 - frac) * table(i, k) + frac * table(i, k + 1);
    }
    return u;
}

}  // namespace kmpc
