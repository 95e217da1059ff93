/*
   Copyright 2026 The amswave Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <functional>
#include <span>
#include <vector>

#include "amswave/process.hpp"

namespace amswave {

/// Bounded test function of a state on the top level set.
using StateFunction = std::function<double(std::span<const double>)>;

/// Central-difference step used for gradients and Hessians: 1e-5 (1 + |y_i|).
double fd_step(double yi);

/// Analytic gradient when available, central differences otherwise.
Point level_gradient(const LevelFunction& xi, std::span<const double> y);

/// Largest |d2 xi / dyi dyj| at y, by central differences.
double level_hessian_max(const LevelFunction& xi, std::span<const double> y);

struct EllipticityReport {
    std::size_t probes = 0;
    double delta_min = 0.0;
    double min_quadratic = 0.0;  // min over probes of grad^T a grad
    Point argmin;
    double max_drift_norm = 0.0;
    double max_diffusion_norm = 0.0;  // Frobenius
    double max_level_hessian = 0.0;
    double max_gradient_mismatch = 0.0;  // analytic vs finite differences, 0 if no analytic gradient
    bool passed = false;
};

/**
 * Spot check of the non-degeneracy condition grad(xi)^T a grad(xi) >= delta
 * together with finiteness of b, sigma and the second derivatives of xi.
 * The probe set is a sample; a pass is not a proof.
 *
 * Throws ModelError naming the probe when any evaluation is non-finite and
 * std::invalid_argument for probes outside {-1 <= xi <= 1}.
 */
EllipticityReport check_ellipticity(const DiffusionModel& model, std::span<const Point> probes,
                                    double delta_min);

/// Uniform grid on the box [lo, hi], keeping the points inside {-1 <= xi <= 1}.
std::vector<Point> slab_probe_grid(const DiffusionModel& model, const Point& lo, const Point& hi,
                                   std::size_t per_axis);

/// P_x(hit hi before lo) for dY = mu ds + sigma dW, via the scale function.
double committor_1d_analytic(double mu, double sigma, double lo, double hi, double x);

struct CommittorEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t n_samples = 0;
    std::size_t censored = 0;
};

/// Per-sample outcome of a committor-type estimate, kept for nested estimators.
struct CommittorSamples {
    std::vector<double> values;  // phi(endpoint) 1{reached top}
    std::size_t censored = 0;
};

/**
 * Monte Carlo estimate of q(phi)(y) = E_y[phi(Y_S1) 1{S1 < SA}] over m
 * paths, each on its own child stream of `rng`. phi = 1 gives the committor.
 * Censored samples contribute zero and are counted; more than 1% censored
 * raises CensoredError.
 */
CommittorEstimate estimate_q(const DiffusionModel& model, std::span<const double> y,
                             const StateFunction& phi, std::size_t m, const RngStream& rng,
                             std::size_t workers = 1);

CommittorSamples sample_q(const DiffusionModel& model, std::span<const double> y,
                          const StateFunction& phi, std::size_t m, const RngStream& rng,
                          std::size_t workers = 1);

} // namespace amswave
