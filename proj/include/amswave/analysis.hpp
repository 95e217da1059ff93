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

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "amswave/ams.hpp"
#include "amswave/levelset.hpp"
#include "amswave/process.hpp"

namespace amswave {

/// Named pass/fail check: value compared with bound, margin = bound - value.
struct BoundCheck {
    std::string name;
    double value = 0.0;
    double bound = 0.0;
    double margin = 0.0;
    bool passed = false;
};

struct Moments {
    double mean = 0.0;
    double variance = 0.0;       // unbiased sample variance
    double std_error = 0.0;      // sqrt(variance / R)
    double skewness = 0.0;       // standardized third moment
    double excess_kurtosis = 0.0;
};

/// Sample moments of `values`; variance needs at least two values.
Moments sample_moments(const std::vector<double>& values);

struct EstimatorReport {
    std::vector<double> values;  // one per replicate
    double mean = 0.0;
    double variance = 0.0;
    double std_error = 0.0;
    std::size_t R = 0;
    std::size_t N = 0;
    double h = 0.0;
    std::vector<BoundCheck> checks;
    double skewness = 0.0;
    double excess_kurtosis = 0.0;

    bool all_passed() const;
};

EstimatorReport summarize(std::vector<double> values, std::size_t N, double h);

// ---------------------------------------------------------------------------
// Naive Monte Carlo
// ---------------------------------------------------------------------------

struct NaiveReport {
    std::size_t M = 0;
    std::size_t successes = 0;
    std::size_t censored = 0;
    double p = 0.0;
    double p_std_error = 0.0;   // sqrt(p (1 - p) / M)
    double indicator_variance = 0.0;  // p (1 - p)
    /// E[phi(Y_S1) 1{S1 < SA}] and its standard error.
    double gamma = 0.0;
    double gamma_std_error = 0.0;
    /// E[phi(Y_S1) | S1 < SA]; absent with zero successes.
    std::optional<double> eta;
    std::optional<double> eta_std_error;
    /// E[psi(path) | S1 < SA] when a path functional was given.
    std::optional<double> path_eta;
    std::optional<double> path_eta_std_error;
};

struct NaiveOptions {
    StateFunction phi;          // defaults to 1
    PathFunction psi;           // optional conditional path observable
    std::size_t workers = 1;
    CensorPolicy censor_policy = CensorPolicy::Abort;
};

/**
 * M i.i.d. stopped paths from the initial law; path i uses stream
 * (seed, replicate, Naive, i). Sums are reduced in fixed chunks of paths in
 * index order, so the result does not depend on the worker count.
 */
NaiveReport naive_monte_carlo(const DiffusionModel& model, std::size_t M, std::uint64_t seed,
                              std::uint64_t replicate, const NaiveOptions& opts = {});

// ---------------------------------------------------------------------------
// Variance bounds and the variance formula
// ---------------------------------------------------------------------------

/// (-p^2 ln p, 2 p (1 - p)) for p in (0, 1).
std::pair<double, double> variance_bounds(double p);

struct QuadratureBudgets {
    std::size_t M_p = 10'000;   // outer paths
    std::size_t M_q = 1'000;    // inner paths per cloud point
    std::size_t cloud_cap = 100;  // cloud points per node
};

struct QuadratureNode {
    double t = 0.0;
    double p_hat = 0.0;
    std::size_t survivors = 0;
    std::size_t cloud = 0;          // points actually used
    double V_q = 0.0;               // debiased variance of q(phi) over eta_t
    double V_q_raw = 0.0;           // outer sample variance of the q estimates
    double inner_noise = 0.0;       // mean inner variance subtracted
    double V_q_centered = 0.0;      // same for q(phi - eta_1(phi))
    double eta_q_centered = 0.0;    // eta_t(q(phi - eta_1(phi))), ~0
    double eta_q_centered_se = 0.0;
    double V_q_one = 0.0;           // debiased variance of q(1)
    double eta_q_one = 0.0;         // eta_t(q(1)), ~ p_1 / p_t
    double bernoulli_bound = 0.0;   // (p_1/p_t)(1 - p_1/p_t)
    double bernoulli_allowance = 0.0;  // three standard errors of V_q_one
    bool bernoulli_ok = true;
};

struct VarianceDecomposition {
    double p1 = 0.0;
    double eta1_phi = 0.0;
    double V_eta1_phi = 0.0;
    double sup_centered = 0.0;  // max |phi - eta_1(phi)| over the final cloud
    double term_V_eta1 = 0.0;   // p1^2 V_{eta_1}(phi)
    double term_log = 0.0;      // -p1^2 ln p1 eta_1(phi)^2
    double term_integral = 0.0; // -2 int V_{eta_t}(q(phi)) p_t dp_t
    double total = 0.0;
    /// Same three terms for the centered observable phi - eta_1(phi).
    double centered_total = 0.0;
    /// sigma_1^2(1), from the q(1) estimates of the same inner samples.
    double unit_total = 0.0;
    std::vector<QuadratureNode> nodes;
};

/**
 * Nested Monte Carlo evaluation of the asymptotic AMS variance sigma_1^2(phi).
 *
 * One set of M_p outer paths gives p_t and the entrance cloud of eta_t at
 * every node; q(phi) is estimated at up to cloud_cap cloud points with M_q
 * inner paths, and its variance is debiased by the mean inner variance. The
 * dp_t integral uses the trapezoid rule on the p-hat nodes.
 *
 * Throws ModelError when a node has no surviving outer path.
 */
VarianceDecomposition variance_formula_quadrature(const DiffusionModel& model, const StateFunction& phi,
                                                  const std::vector<double>& level_nodes,
                                                  const QuadratureBudgets& budgets, std::uint64_t seed,
                                                  std::size_t workers = 1);

/// Decomposition restricted to every `stride`-th node (first and last kept).
VarianceDecomposition coarsen(const VarianceDecomposition& fine, std::size_t stride);

struct EtaVarianceReport {
    double value = 0.0;     // sigma_1^2(phi - eta_1(phi)) / p_1^2
    double lower = 0.0;     // V_{eta_1}(phi)
    double upper = 0.0;     // V_{eta_1}(phi) + |phi - eta_1 phi|^2 (sigma^2(1)/p1^2 - ln p1)
    bool inside = false;
    double tolerance = 0.0;
    /// Largest |eta_t(q(phi - eta_1 phi))| / se over the nodes.
    double centering_max_z = 0.0;
    bool centering_ok = false;
};

/**
 * Asymptotic variance of eta_1^N(phi) and the sandwich around it, with the
 * upper bound built from sigma_1^2(1) of the same nodes. `tolerance` is a
 * relative allowance for the membership test.
 */
EtaVarianceReport eta_variance_formula(const VarianceDecomposition& decomp, double tolerance = 0.0);

// ---------------------------------------------------------------------------
// Replicate diagnostics
// ---------------------------------------------------------------------------

struct CltReport {
    std::size_t R = 0;
    std::size_t N = 0;
    double p_ref = 0.0;
    double mean = 0.0;
    double variance_about_mean = 0.0;   // sample variance of sqrt(N) p^N
    double variance_about_ref = 0.0;    // mean of N (p^N - p_ref)^2
    double variance_std_error = 0.0;    // approximate, from the fourth moment
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
    double skew_gate = 0.0;             // 4 sqrt(6/R)
    double kurt_gate = 0.0;             // 4 sqrt(24/R)
    bool normal_ok = false;
    double lower = 0.0;
    double upper = 0.0;
    bool in_bracket = false;            // with a 3 sigma allowance
};

/// Pre: R >= 100 (std::invalid_argument otherwise).
CltReport clt_diagnostics(const std::vector<double>& p_values, std::size_t N, double p_ref);

struct J1Report {
    std::size_t R = 0;
    std::size_t N = 0;
    double mean = 0.0;
    double expected = 0.0;          // -N ln p_ref
    double relative_error = 0.0;
    double std_dev = 0.0;
    double dispersion = 0.0;        // std_dev / sqrt(N)
    double expected_dispersion = 0.0;  // sqrt(-ln p_ref)
};

J1Report j1_scaling_check(const std::vector<double>& j1_values, std::size_t N, double p_ref);

struct L2Report {
    std::size_t R = 0;
    std::size_t N = 0;
    double mse = 0.0;
    double mse_std_error = 0.0;
    double bound = 0.0;             // 6 |phi|^2 / N
    double scaled = 0.0;            // N mse
    bool passed = false;            // mse <= bound + 3 se
};

L2Report l2_bound_check(const std::vector<double>& gamma_values, double gamma_ref, double phi_sup,
                        std::size_t N);

} // namespace amswave
