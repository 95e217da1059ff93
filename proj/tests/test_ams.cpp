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

#include "amswave/ams.hpp"
#include "amswave/levelset.hpp"
#include "amswave/models.hpp"

using namespace amswave;

namespace {

const StateFunction one = [](std::span<const double>) { return 1.0; };

Trajectory from_levels(const std::vector<double>& levels, PathStatus status)
{
    Trajectory t(1);
    for (double l : levels) {
        const double y[1] = {l};
        t.push(y, l);
    }
    t.set_status(status);
    return t;
}

Particle particle(const std::vector<double>& levels, PathStatus status, std::size_t id)
{
    Trajectory t = from_levels(levels, status);
    const double s = t.score();
    return {std::move(t), s, id};
}

} // namespace

TEST_CASE("minimal system of two particles")
{
    const auto m = models::bm1d();
    const auto ps = initialize_particles(m, 2, {1, 0});
    REQUIRE(ps.size() == 2);
    for (const auto& p : ps) {
        CHECK(p.score >= 0.0);
        CHECK(p.score <= 1.0);
        CHECK(p.score == p.traj.score());
    }
}

TEST_CASE("initial success count matches N p")
{
    const auto m = models::bm1d();
    const std::size_t reps = 300;
    double sum = 0, sq = 0;
    for (std::size_t r = 0; r < reps; ++r) {
        const auto ps = initialize_particles(m, 100, {2, r});
        double c = 0;
        for (const auto& p : ps) c += p.score == 1.0;
        sum += c;
        sq += c * c;
    }
    const double mean = sum / reps;
    const double se = std::sqrt((sq / reps - mean * mean) / reps);
    // 0.5 particles of Euler crossing bias at h = 1e-3.
    CHECK(std::abs(mean - 100 * 0.119203) < 3 * se + 0.5);
}

TEST_CASE("degenerate model aborts initialization")
{
    CHECK_THROWS_AS(initialize_particles(models::frozen(10), 4, {3, 0}), CensoredError);
}

TEST_CASE("ams_step terminates when every score is one")
{
    const auto m = models::bm1d();
    std::vector<Particle> ps{particle({0, 1.2}, PathStatus::ReachedTop, 0),
                             particle({0, 1.1}, PathStatus::ReachedTop, 1)};
    RngStream sel(1, 1);
    CHECK_FALSE(ams_step(m, ps, sel, RngStream(1, 2), 1).has_value());
    CHECK(sel.counter() == 0);
}

TEST_CASE("ams_step kills the minimum and picks a parent uniformly")
{
    const auto m = models::bm1d();
    const std::size_t trials = 4000;
    std::size_t picked_second = 0;
    for (std::size_t i = 0; i < trials; ++i) {
        std::vector<Particle> ps{particle({0, 0.2, -1.1}, PathStatus::Absorbed, 0),
                                 particle({0, 0.5, -1.2}, PathStatus::Absorbed, 1),
                                 particle({0, 0.3, 1.2}, PathStatus::ReachedTop, 2)};
        RngStream sel = make_stream(4, i, Purpose::Selection, 0);
        AmsDiagnostics diag;
        const auto ev = ams_step(m, ps, sel, make_stream(4, i, Purpose::Lifetime, 0), 1,
                                 CensorPolicy::Abort, &diag);
        REQUIRE(ev.has_value());
        CHECK(ev->killed == 0);
        CHECK(ev->tau == 0.2);
        CHECK(ev->parent != 0);
        CHECK(ev->sigma_index == 1);
        CHECK(sel.counter() == 1);
        CHECK(ps[0].score > 0.2);
        CHECK(ps[0].traj.level(0) == 0.0);
        CHECK(ps[0].traj.level(1) == (ev->parent == 1 ? 0.5 : 0.3));
        CHECK(diag.ties == 0);
        picked_second += ev->parent == 1;
    }
    const double f = static_cast<double>(picked_second) / trials;
    CHECK(std::abs(f - 0.5) < 3 * std::sqrt(0.25 / trials));
}

TEST_CASE("ties are broken by index and counted")
{
    const auto m = models::bm1d();
    std::vector<Particle> ps{particle({0, 0.5, -1.2}, PathStatus::Absorbed, 0),
                             particle({0, -1.1}, PathStatus::Absorbed, 1),
                             particle({0, -1.3}, PathStatus::Absorbed, 2)};
    RngStream sel(5, 5);
    AmsDiagnostics diag;
    const auto ev = ams_step(m, ps, sel, RngStream(5, 6), 1, CensorPolicy::Abort, &diag);
    REQUIRE(ev.has_value());
    CHECK(ev->killed == 1);
    CHECK(ev->parent == 0);
    CHECK(ev->tau == 0.0);
    CHECK(diag.ties == 1);
}

TEST_CASE("rebranched particles start strictly above tau")
{
    const auto m = models::bm1d();
    std::size_t steps = 0;
    for (std::uint64_t r = 0; steps < 10000; ++r) {
        const auto run = run_ams(m, 10, {0.25, 0.5, 0.75}, {6, r});
        steps += run.diagnostics.steps;
        CHECK(run.diagnostics.tau_decreases == 0);
        CHECK(run.diagnostics.entrance_violations == 0);
        for (std::size_t j = 1; j < run.events.size(); ++j) CHECK(run.events[j].tau >= run.events[j - 1].tau);
    }
}

TEST_CASE("run_ams invariants")
{
    const auto m = models::coupled2d();
    const std::vector<double> grid{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
    AmsOptions opts;
    opts.keep_final_paths = true;
    const auto run = run_ams(m, 50, grid, {7, 0}, opts);
    CHECK(run.p_N() == survival_estimate(50, run.J1()));
    CHECK(run.p_N() == doctest::Approx(std::pow(1 - 1.0 / 50, static_cast<double>(run.J1()))).epsilon(1e-12));
    for (double s : run.final_scores) CHECK(s == 1.0);
    REQUIRE(run.final_paths.size() == 50);
    for (const auto& p : run.final_paths) CHECK(p.status() == PathStatus::ReachedTop);
    REQUIRE(run.snapshots.size() == grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const auto& s = run.snapshots[k];
        CHECK(s.t == grid[k]);
        CHECK(s.p_t_N == survival_estimate(50, s.J_t));
        CHECK(s.p_t_N > 0.0);
        if (k) CHECK(s.J_t >= run.snapshots[k - 1].J_t);
        for (const auto& x : s.entrance_states) CHECK(m.level(x) >= s.t);
        // Level 0 is read from the initial states, before any branching.
        std::size_t below = 0;
        for (const auto& e : run.events) below += e.tau <= s.t;
        CHECK(s.J_t == (s.t > 0.0 ? below : 0));
    }
    for (const auto& e : run.events) {
        CHECK(e.parent != e.killed);
        CHECK(e.tau < 1.0);
    }
    CHECK(run.snapshots.back().J_t == run.J1());
}

TEST_CASE("snapshot at 0 holds the initial states")
{
    const auto m = models::coupled2d();
    const ParticleStreams streams{8, 3};
    const auto run = run_ams(m, 20, {0.0}, streams);
    const auto init = initialize_particles(m, 20, streams);
    const auto& s = run.snapshots.front();
    CHECK(s.J_t == 0);
    CHECK(s.p_t_N == 1.0);
    for (std::size_t n = 0; n < 20; ++n) CHECK(s.entrance_states[n] == init[n].traj.state_point(0));
}

TEST_CASE("runs are deterministic")
{
    const auto m = models::bm1d();
    const auto a = run_ams(m, 30, {0.5}, {9, 4});
    const auto b = run_ams(m, 30, {0.5}, {9, 4});
    CHECK(a.events == b.events);
    CHECK(a.final_scores == b.final_scores);
    const auto c = run_ams(m, 30, {0.5}, {9, 5});
    CHECK_FALSE(a.events == c.events);
}

TEST_CASE("explosion guard")
{
    AmsOptions opts;
    opts.max_branchings = 3;
    CHECK_THROWS_AS(run_ams(models::bm1d(), 20, {}, {10, 0}, opts), ExplosionError);
    CHECK(default_max_branchings(100) == static_cast<std::size_t>(std::ceil(100 * 100 * std::log(1e6))));
}

TEST_CASE("estimate from a snapshot")
{
    LevelSnapshot s;
    s.t = 0.3;
    s.J_t = 4;
    s.p_t_N = survival_estimate(2, 4);
    s.entrance_states = {{0.31}, {0.5}};
    const auto e1 = estimate(s, one);
    CHECK(e1.eta == 1.0);
    CHECK(e1.gamma == e1.p);
    CHECK(e1.p == 0.0625);
    const StateFunction sq = [](std::span<const double> y) { return y[0] * y[0]; };
    const auto e2 = estimate(s, sq);
    CHECK(e2.eta == doctest::Approx((0.31 * 0.31 + 0.25) / 2));
    CHECK(e2.gamma == e2.p * e2.eta);
}

TEST_CASE("level observable overshoot shrinks with the step")
{
    const StateFunction xi = [](std::span<const double> y) { return y[0]; };
    double overshoot[2] = {0, 0};
    const double steps[2] = {4e-3, 1e-3};
    for (int i = 0; i < 2; ++i) {
        const auto m = models::bm1d(-1, 1, steps[i]);
        for (std::uint64_t r = 0; r < 20; ++r) {
            const auto run = run_ams(m, 50, {0.5}, {11, r});
            const double eta = estimate(run.snapshots[0], xi).eta;
            CHECK(eta >= 0.5);
            overshoot[i] += eta - 0.5;
        }
    }
    CHECK(overshoot[1] < overshoot[0]);
}

TEST_CASE("path observables agree with the snapshot API")
{
    const auto m = models::bm1d();
    AmsOptions opts;
    opts.keep_final_paths = true;
    const auto run = run_ams(m, 40, {1.0}, {12, 0}, opts);
    const auto unit = path_observable_estimate(run, [](const Trajectory&) { return 1.0; });
    CHECK(unit.gamma == run.p_N());
    CHECK(unit.eta == 1.0);
    const auto end = path_observable_estimate(run, [](const Trajectory& t) { return t.back()[0]; });
    const auto snap = estimate(run.snapshots[0], [](std::span<const double> y) { return y[0]; });
    CHECK(end.eta == doctest::Approx(snap.eta).epsilon(1e-14));
    CHECK(end.gamma == doctest::Approx(snap.gamma).epsilon(1e-14));
}

TEST_CASE("mean J1 follows -N ln p")
{
    const auto m = models::bm1d();
    double sum = 0;
    const std::size_t R = 200;
    for (std::uint64_t r = 0; r < R; ++r) sum += static_cast<double>(run_ams(m, 100, {}, {13, r}).J1());
    const double expected = -100 * std::log(committor_1d_analytic(-1, 1, -1, 1, 0));
    CHECK(expected == doctest::Approx(212.7).epsilon(1e-3));
    CHECK(std::abs(sum / R - expected) < 0.1 * expected);
}

TEST_CASE("pick_uniform covers every index")
{
    CHECK(pick_uniform(0.0, 5) == 0);
    CHECK(pick_uniform(0.999999, 5) == 4);
    CHECK(pick_uniform(0.4, 5) == 2);
}
