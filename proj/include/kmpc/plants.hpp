#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kmpc/signals.hpp"
#include "kmpc/snapshots.hpp"
#include "kmpc/types.hpp"

namespace kmpc {

/// A simulated continuous-time controlled plant: vector field F(x, u)
/// integrated with classical RK4 under zero-order-hold inputs, designated
/// output coordinates, input saturation box, and Gaussian measurement noise.
struct PlantSpec {
    int state_dim = 0;
    int input_dim = 0;
    std::vector<int> output_indices;
    std::function<Vec(const Vec&, const Vec&)> vector_field;
    Vec u_min;
    Vec u_max;
    Vec noise_std;               ///< per output channel
    double integrator_step = 0.01;
    Vec x0;
    std::string name;

    int output_dim() const { return static_cast<int>(output_indices.size()); }

    void validate() const {
        if (state_dim < 1 || input_dim < 0) throw std::invalid_argument("PlantSpec: bad dimensions");
        if (!vector_field) throw std::invalid_argument("PlantSpec: missing vector field");
        if (u_min.size() != input_dim || u_max.size() != input_dim) {
            throw std::invalid_argument("PlantSpec: saturation box dimensions");
        }
        for (Index i = 0; i < u_min.size(); ++i) {
            if (!(u_min[i] < u_max[i])) throw std::invalid_argument("PlantSpec: u_min must be < u_max");
        }
        if (noise_std.size() != output_dim() || (noise_std.array() < 0.0).any()) {
            throw std::invalid_argument("PlantSpec: noise_std must be >= 0 per output channel");
        }
        if (!(integrator_step > 0.0)) throw std::invalid_argument("PlantSpec: integrator_step must be > 0");
    }

    Vec clip(const Vec& u) const {
        return u.cwiseMax(u_min).cwiseMin(u_max);
    }

    Vec measure(const Vec& x) const {
        Vec y(output_dim());
        for (int i = 0; i < output_dim(); ++i) {
            y[i] = x[output_indices[static_cast<std::size_t>(i)]];
        }
        return y;
    }

    Vec measure_noisy(const Vec& x, Rng& rng) const {
        std::normal_distribution<double> gauss(0.0, 1.0);
        Vec y = measure(x);
        for (Index i = 0; i < y.size(); ++i) {
            y[i] += noise_std[i] * gauss(rng);
        }
        return y;
    }
};

struct StepResult {
    Vec next_state;
    Vec measurement;  ///< noisy designated outputs of the next state
};

namespace detail {

inline Vec rk4_substep(const std::function<Vec(const Vec&, const Vec&)>& f, const Vec& x,
                       const Vec& u, double h) {
    const Vec k1 = f(x, u);
    const Vec k2 = f(x + 0.5 * h * k1, u);
    const Vec k3 = f(x + 0.5 * h * k2, u);
    const Vec k4 = f(x + h * k3, u);
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace detail

/// Advances the plant by one sampling period: clips the input to the
/// saturation box, integrates with RK4 at the internal step, and returns the
/// next state together with its noisy measurement.
inline StepResult step(const PlantSpec& plant, const Vec& x, const Vec& u, double T_s, Rng& rng) {
    if (!(T_s > 0.0)) throw std::invalid_argument("step: T_s must be > 0");
    if (!x.allFinite()) throw std::runtime_error("step: non-finite state on entry");
    const Vec uc = plant.clip(u);
    const int substeps = std::max(1, static_cast<int>(std::ceil(T_s / plant.integrator_step - 1e-9)));
    const double h = T_s / static_cast<double>(substeps);
    Vec xi = x;
    for (int s = 0; s < substeps; ++s) {
        xi = detail::rk4_substep(plant.vector_field, xi, uc, h);
    }
    if (!xi.allFinite()) {
        throw std::runtime_error("step: plant state diverged (non-finite after integration)");
    }
    return {xi, plant.measure_noisy(xi, rng)};
}

/// Simulates one trial under a time/step-indexed command signal, sampling
/// at T_s. The logged inputs are the clipped (applied) commands.
inline Trial simulate_trial(const PlantSpec& plant,
                            const std::function<Vec(double, Index)>& input_at, double duration,
                            double T_s, Rng& rng, std::string name = "trial") {
    plant.validate();
    const Index K = static_cast<Index>(std::llround(duration / T_s));
    if (K < 1) throw std::invalid_argument("simulate_trial: duration shorter than one sample");
    Trial trial;
    trial.name = std::move(name);
    trial.time.resize(K + 1);
    trial.states.resize(K + 1, plant.output_dim());
    trial.inputs.resize(K + 1, plant.input_dim);

    Vec x = plant.x0;
    trial.time[0] = 0.0;
    trial.states.row(0) = plant.measure_noisy(x, rng).transpose();
    for (Index k = 0; k < K; ++k) {
        const double t = static_cast<double>(k) * T_s;
        const Vec u = plant.clip(input_at(t, k));
        trial.inputs.row(k) = u.transpose();
        StepResult res = step(plant, x, u, T_s, rng);
        x = std::move(res.next_state);
        trial.time[k + 1] = static_cast<double>(k + 1) * T_s;
        trial.states.row(k + 1) = res.measurement.transpose();
    }
    trial.inputs.row(K) = plant.clip(input_at(static_cast<double>(K) * T_s, K)).transpose();
    return trial;
}

struct ExactLiftingParams {
    double mu = -0.5;
    double kappa = -1.0;
};

/// Oracle plant whose flow is exactly linear in the monomial lifting
/// [x1, x2, x1^2]:  x1' = mu x1,  x2' = kappa (x2 - x1^2) + u.
inline PlantSpec exact_lifting_plant(const ExactLiftingParams& params = {}, double noise_std = 0.0) {
    PlantSpec plant;
    plant.name = "exact-lifting";
    plant.state_dim = 2;
    plant.input_dim = 1;
    plant.output_indices = {0, 1};
    plant.u_min = Vec::Constant(1, -10.0);
    plant.u_max = Vec::Constant(1, 10.0);
    plant.noise_std = Vec::Constant(2, noise_std);
    plant.integrator_step = 0.01;
    plant.x0 = (Vec(2) << 1.0, 0.5).finished();
    const double mu = params.mu;
    const double kappa = params.kappa;
    plant.vector_field = [mu, kappa](const Vec& x, const Vec& u) {
        Vec dx(2);
        dx[0] = mu * x[0];
        dx[1] = kappa * (x[1] - x[0] * x[0]) + u[0];
        return dx;
    };
    return plant;
}

struct ArmSurrogateParams {
    double stiffness = 4.0;         ///< k0, linear spring rate at the origin
    double stiffening_radius = 0.2; ///< p_ref, deflection where stiffness doubles
    double cross_stiffness = 140.0; ///< k3, anisotropic cubic spring term
    double damping = 2.8;
    double gain = 0.15;             ///< force per unit of saturated command
    double input_scale = 12.0;      ///< tanh saturation scale for the command map
    double noise_std = 0.0025;      ///< per output channel, Fig.3-style spread ~ 1 cm-equivalent
};

/// Planar nonlinear surrogate for the physical arm: 2-D output driven by
/// three redundant actuation directions at 120 degree spacing with smooth
/// saturating command gains and a state-dependent spring.
///
/// State [px, py, vx, vy], outputs (px, py), inputs three 0-10 commands:
///   p'' = gain * sum_i d_i * s(u_i)
///         - k0 (1 + |p|^2 / p_ref^2) p - k3 (px py^2, py px^2) - c p'
/// with s(u) = input_scale * tanh(u / input_scale) and
/// d_i = (cos, sin)(90 + 120 (i-1) degrees). The k3 term is the gradient of
/// the quartic potential k3 px^2 py^2 / 2, so the spring stays conservative
/// and stable while its stiffness varies with direction, not just radius.
/// Equal commands cancel by symmetry, so the relaxed equilibrium is the
/// origin.
inline PlantSpec arm_surrogate_plant(const ArmSurrogateParams& params = {}) {
    PlantSpec plant;
    plant.name = "arm-surrogate";
    plant.state_dim = 4;
    plant.input_dim = 3;
    plant.output_indices = {0, 1};
    plant.u_min = Vec::Zero(3);
    plant.u_max = Vec::Constant(3, 10.0);
    plant.noise_std = Vec::Constant(2, params.noise_std);
    plant.integrator_step = 0.01;
    plant.x0 = Vec::Zero(4);

    Mat directions(2, 3);
    for (int i = 0; i < 3; ++i) {
        const double theta = M_PI / 2.0 + 2.0 * M_PI * static_cast<double>(i) / 3.0;
        directions(0, i) = std::cos(theta);
        directions(1, i) = std::sin(theta);
    }
    const ArmSurrogateParams pr = params;
    plant.vector_field = [pr, directions](const Vec& x, const Vec& u) {
        const Eigen::Vector2d p = x.head<2>();
        const Eigen::Vector2d v = x.tail<2>();
        Eigen::Vector2d force = Eigen::Vector2d::Zero();
        for (int i = 0; i < 3; ++i) {
            const double s = pr.input_scale * std::tanh(u[i] / pr.input_scale);
            force += pr.gain * s * directions.col(i);
        }
        const double k = pr.stiffness *
                         (1.0 + p.squaredNorm() / (pr.stiffening_radius * pr.stiffening_radius));
        const Eigen::Vector2d cross{pr.cross_stiffness * p[0] * p[1] * p[1],
                                    pr.cross_stiffness * p[1] * p[0] * p[0]};
        Vec dx(4);
        dx.head<2>() = v;
        dx.tail<2>() = force - k * p - cross - pr.damping * v;
        return dx;
    };
    return plant;
}

}  // namespace kmpc
