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

#include <cmath>
#include <vector>

#include <doctest.h>

#include "amswave/analysis.hpp"
#include "amswave/levelset.hpp"
#include "amswave/models.hpp"

using namespace amswave;

namespace {

const StateFunction one = [](std::span<const double>) { return 1.0; };

std::vector<double> uniform_nodes(std::size_t K)
{
    std::vector<double> g(K + 1);
    for (std::size_t k = 0; k <= K; ++k) g[k] = static_cast<double>(k) / static_cast<double>(K);
    return g;
}

std::vector<double> gaussian_sample(std::size_t R, double mean, double sd, std::uint64_t seed)
{
    RngStream rng(seed, 0);
    std::vector<double> v(R);
    for (auto& x : v) x = mean + sd * rng.normal();
    return v;
}

} // namespace

TEST_CASE("sample moments")
{
    const auto m = sample_moments({1, 2, 3, 4});
    CHECK(m.mean == 2.5);
    CHECK(m.variance == doctest::Approx(5.0 / 3));
    CHECK(m.std_error == doctest::Approx(std::sqrt(5.0 / 12)));
    CHECK(std::abs(m.skewness) < 1e-12);
    const auto r = summarize({0.1, 0.2, 0.3}, 10, 1e-3);
    CHECK(r.R == 3);
    CHECK(r.std_error == doctest::Approx(std::sqrt(r.variance / 3)));
    CHECK(r.variance >= 0.0);
}

TEST_CASE("variance bounds")
{
    const auto [lo, hi] = variance_bounds(0.1192);
    CHECK(lo == doctest::Approx(0.03022).epsilon(1e-3));
    CHECK(hi == doctest::Approx(0.20999).epsilon(1e-4));
    const auto [lo1, hi1] = variance_bounds(1 - 1e-9);
    CHECK(lo1 < 1e-8);
    CHECK(hi1 < 1e-8);
    for (int i = 1; i < 1000; ++i) {
        const auto [a, b] = variance_bounds(i / 1000.0);
        CHECK(a < b);
    }
    CHECK_THROWS(variance_bounds(0.0));
    CHECK_THROWS(variance_bounds(1.0));
}

TEST_CASE("naive MC on a sure success")
{
    const auto m = models::bm1d(1e4, 1.0);
    const auto r = naive_monte_carlo(m, 100, 1, 0);
    CHECK(r.p == 1.0);
    CHECK(r.p_std_error == 0.0);
    CHECK(r.eta.has_value());
}

TEST_CASE("naive MC with no successes flags the conditional estimates")
{
    const auto m = models::bm1d(-1e4, 1.0);
    const auto r = naive_monte_carlo(m, 100, 1, 0);
    CHECK(r.p == 0.0);
    CHECK_FALSE(r.eta.has_value());
}

TEST_CASE("naive MC agrees with the scale function")
{
    // Euler crossing bias is measured against a coarser step and budgeted.
    const double p = committor_1d_analytic(-1, 1, -1, 1, 0);
    const auto fine = naive_monte_carlo(models::bm1d(-1, 1, 1e-3), 100000, 2, 0);
    const auto coarse = naive_monte_carlo(models::bm1d(-1, 1, 4e-3), 100000, 2, 1);
    const double bias = std::abs(coarse.p - fine.p);
    CHECK(std::abs(fine.p - p) < 3 * fine.p_std_error + bias);
    CHECK(fine.indicator_variance == doctest::Approx(fine.p * (1 - fine.p)));
    CHECK(p * (1 - p) == doctest::Approx(0.1050).epsilon(1e-3));
    CHECK(fine.p_std_error == doctest::Approx(std::sqrt(fine.p * (1 - fine.p) / 100000)));
}

TEST_CASE("naive MC does not depend on the worker count")
{
    const auto m = models::coupled2d();
    NaiveOptions a;
    a.psi = [](const Trajectory& t) { return static_cast<double>(t.steps()); };
    NaiveOptions b = a;
    b.workers = 3;
    const auto ra = naive_monte_carlo(m, 3000, 3, 0, a);
    const auto rb = naive_monte_carlo(m, 3000, 3, 0, b);
    CHECK(ra.p == rb.p);
    CHECK(ra.gamma == rb.gamma);
    CHECK(*ra.path_eta == *rb.path_eta);
    CHECK(*ra.path_eta_std_error == *rb.path_eta_std_error);
}

TEST_CASE("quadrature on the 1-D model attains the lower bound")
{
    const auto m = models::bm1d();
    const QuadratureBudgets budgets{10000, 200, 40};
    const auto d = variance_formula_quadrature(m, one, uniform_nodes(10), budgets, 4);
    CHECK(d.term_V_eta1 == 0.0);
    CHECK(d.eta1_phi == 1.0);
    const double target = -std::pow(0.119203, 2) * std::log(0.119203);
    CHECK(target == doctest::Approx(0.03022).epsilon(1e-3));
    CHECK(std::abs(d.total - target) < 0.15 * target);
    for (const auto& n : d.nodes) {
        CHECK(std::abs(n.V_q) < 0.005);
        CHECK(n.bernoulli_ok);
    }
    const auto [lo, hi] = variance_bounds(d.p1);
    CHECK(d.unit_total >= lo - 0.005);
    CHECK(d.unit_total <= hi);
    const auto coarse = coarsen(d, 2);
    CHECK(coarse.nodes.size() == 6);
    CHECK(coarse.term_log == d.term_log);

    const auto eta = eta_variance_formula(d);
    CHECK(eta.value == 0.0);
    CHECK(eta.lower == 0.0);
}

TEST_CASE("sandwich for an observable of an attached coordinate")
{
    const auto m = models::bm2d(-1.0);
    const StateFunction phi = [](std::span<const double> y) { return std::tanh(y[1]); };
    const QuadratureBudgets budgets{10000, 200, 40};
    const auto d = variance_formula_quadrature(m, phi, uniform_nodes(10), budgets, 5);
    CHECK(d.V_eta1_phi > 0.0);
    CHECK(d.term_V_eta1 == doctest::Approx(d.p1 * d.p1 * d.V_eta1_phi));
    const auto e = eta_variance_formula(d, 0.1);
    CHECK(e.centering_ok);
    CHECK(e.value >= e.lower * 0.9);
    CHECK(e.value <= e.upper * 1.1);
    CHECK(e.inside);
    for (const auto& n : d.nodes) {
        if (n.eta_q_centered_se > 0) CHECK(std::abs(n.eta_q_centered) < 3 * n.eta_q_centered_se);
    }
}

TEST_CASE("quadrature rejects bad node sets")
{
    const auto m = models::bm1d();
    CHECK_THROWS(variance_formula_quadrature(m, one, {0.0, 1.0}, {}, 1));
    CHECK_THROWS(variance_formula_quadrature(m, one, {0.0, 0.7, 0.5, 1.0}, {}, 1));
}

TEST_CASE("CLT gates pass on Gaussian replicates")
{
    const double p = 0.2;
    const std::size_t N = 100;
    const auto v = gaussian_sample(500, p, std::sqrt(0.1 / N), 6);
    const auto r = clt_diagnostics(v, N, p);
    CHECK(r.normal_ok);
    CHECK(r.variance_about_mean == doctest::Approx(0.1).epsilon(0.2));
    CHECK(r.in_bracket);
    CHECK(r.skew_gate == doctest::Approx(4 * std::sqrt(6.0 / 500)));
    CHECK(r.kurt_gate == doctest::Approx(4 * std::sqrt(24.0 / 500)));
    CHECK_THROWS(clt_diagnostics(std::vector<double>(50, 0.1), N, p));
}

TEST_CASE("CLT gates reject a skewed sample")
{
    RngStream rng(7, 0);
    std::vector<double> v(500);
    for (auto& x : v) x = rng.exponential(1.0);
    CHECK_FALSE(clt_diagnostics(v, 10, 1.0 - 1e-9).normal_ok);
}

TEST_CASE("J1 scaling")
{
    const auto r = j1_scaling_check(std::vector<double>(100, 0.0), 50, 1.0);
    CHECK(r.expected == 0.0);
    CHECK(r.mean == 0.0);
    CHECK(r.std_dev == 0.0);
    std::vector<double> j(200);
    RngStream rng(8, 0);
    const double expected = -100 * std::log(0.1192);
    for (auto& x : j) x = std::round(expected + std::sqrt(100 * -std::log(0.1192)) * rng.normal());
    const auto s = j1_scaling_check(j, 100, 0.1192);
    CHECK(s.expected == doctest::Approx(212.7).epsilon(1e-3));
    CHECK(s.relative_error < 0.02);
    CHECK(s.dispersion == doctest::Approx(s.expected_dispersion).epsilon(0.2));
}

TEST_CASE("L2 bound")
{
    const auto exact = l2_bound_check(std::vector<double>(100, 0.3), 0.25, 1.0, 100);
    CHECK(exact.mse == doctest::Approx(0.0025));
    CHECK(exact.mse_std_error == doctest::Approx(0.0).scale(1));
    CHECK(exact.bound == doctest::Approx(0.06));
    CHECK(exact.passed);
    const auto far = l2_bound_check(std::vector<double>(100, 0.9), 0.1, 1.0, 100);
    CHECK_FALSE(far.passed);
    const auto g = gaussian_sample(400, 0.2, std::sqrt(0.03 / 100), 9);
    const auto r = l2_bound_check(g, 0.2, 1.0, 100);
    CHECK(r.passed);
    CHECK(r.scaled == doctest::Approx(0.03).epsilon(0.25));
}
