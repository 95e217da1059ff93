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

#include "amswave/levelset.hpp"
#include "amswave/models.hpp"
#include "amswave/process.hpp"

using namespace amswave;

namespace {

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

// Fraction of top hits over n independent paths from x0.
double hit_fraction(const DiffusionModel& model, const Point& x0, std::size_t n, std::uint64_t seed)
{
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
        RngStream rng = make_stream(seed, 0, Purpose::Synthetic, i);
        if (simulate_path(model, x0, rng).status() == PathStatus::ReachedTop) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(n);
}

} // namespace

TEST_CASE("first_crossing_index is strict")
{
    const auto t = from_levels({0, 0.4, 0.2, 0.7}, PathStatus::Absorbed);
    CHECK(first_crossing_index(t, 0.4) == 3u);
    CHECK(first_crossing_index(t, -0.1) == 0u);
    CHECK_FALSE(first_crossing_index(t, 1.0).has_value());
    CHECK_FALSE(first_crossing_index(t, 0.7).has_value());
}

TEST_CASE("score examples")
{
    CHECK(score(from_levels({0, 0.3, 0.1}, PathStatus::Absorbed)) == 0.3);
    CHECK(score(from_levels({0}, PathStatus::Absorbed)) == 0.0);
    CHECK(score(from_levels({0, 0.5, 1.2}, PathStatus::ReachedTop)) == 1.0);
}

TEST_CASE("entrance_index uses the initial state below level 0")
{
    const auto t = from_levels({0, 0.4, 0.2, 0.7}, PathStatus::Absorbed);
    CHECK(entrance_index(t, -0.5) == 0u);
    CHECK(entrance_index(t, 0.0) == 0u);
    CHECK(entrance_index(t, 0.5) == 3u);
    CHECK_FALSE(entrance_index(t, 0.8).has_value());
}

TEST_CASE("start above the top level")
{
    const auto model = models::bm1d();
    RngStream rng(1, 1);
    const Point x0{1.5};
    const auto t = simulate_path(model, x0, rng);
    CHECK(t.size() == 1);
    CHECK(t.status() == PathStatus::ReachedTop);
    CHECK(t.score() == 1.0);
    CHECK(rng.counter() == 0);
}

TEST_CASE("frozen model is censored after max_steps")
{
    const auto model = models::frozen(10);
    RngStream rng(1, 1);
    const auto t = simulate_path(model, Point{0.0}, rng);
    CHECK(t.status() == PathStatus::Censored);
    CHECK(t.steps() == 10);
}

TEST_CASE("stopping invariants, determinism and draw accounting")
{
    for (const auto& model : {models::bm1d(), models::coupled2d(), models::bm2d(-0.5)}) {
        for (std::uint64_t i = 0; i < 200; ++i) {
            RngStream init = make_stream(4, 0, Purpose::Synthetic, i);
            const Point x0 = model.sample_initial(init);
            RngStream a = make_stream(4, 1, Purpose::Synthetic, i);
            RngStream b = a;
            const auto t = simulate_path(model, x0, a);
            CHECK(t == simulate_path(model, x0, b));
            CHECK(a.counter() == model.noise_dim * t.steps());
            const auto& lv = t.levels();
            for (std::size_t k = 0; k + 1 < lv.size(); ++k) {
                REQUIRE(lv[k] <= 1.0);
                REQUIRE(lv[k] > model.absorb_threshold);
            }
            if (t.status() == PathStatus::ReachedTop) {
                CHECK(lv.back() > 1.0);
                CHECK(t.score() == 1.0);
            } else {
                REQUIRE(t.status() == PathStatus::Absorbed);
                CHECK(lv.back() <= model.absorb_threshold);
                CHECK(t.score() < 1.0);
                CHECK(t.score() >= 0.0);
                CHECK_FALSE(first_crossing_index(t, t.score()).has_value());
            }
        }
    }
}

TEST_CASE("extending in pieces equals one call")
{
    const auto model = models::coupled2d();
    RngStream init(8, 8);
    const Point x0 = model.sample_initial(init);
    RngStream a(9, 9);
    RngStream b(9, 9);
    const auto whole = simulate_path(model, x0, a);
    auto pieces = start_path(model, x0);
    for (double target : {0.1, 0.2, 0.35, 0.6, 1.0}) {
        if (!pieces.stopped()) extend_path(model, pieces, target, b);
    }
    CHECK(pieces == whole);
}

TEST_CASE("resume_path keeps the prefix and ignores earlier noise")
{
    const auto model = models::bm1d();
    RngStream a(10, 1);
    const auto t = simulate_path(model, Point{0.0}, a);
    REQUIRE(t.steps() > 20);
    RngStream r1(11, 1);
    RngStream r2(11, 1);
    const auto resumed = resume_path(model, t, 20, r1);
    for (std::size_t k = 0; k <= 20; ++k) CHECK(resumed.level(k) == t.level(k));
    const auto fresh = simulate_path(model, t.state(20), r2);
    REQUIRE(resumed.size() == 20 + fresh.size());
    for (std::size_t k = 0; k < fresh.size(); ++k) CHECK(resumed.level(20 + k) == fresh.level(k));
}

TEST_CASE("resume_path at k = 0 is simulate_path")
{
    const auto model = models::bm1d();
    RngStream a(12, 1);
    const auto t = simulate_path(model, Point{0.0}, a);
    RngStream r1(13, 1);
    RngStream r2(13, 1);
    CHECK(resume_path(model, t, 0, r1) == simulate_path(model, Point{0.0}, r2));
}

TEST_CASE("resume past the top returns the prefix unchanged")
{
    const auto model = models::bm1d();
    for (std::uint64_t s = 0;; ++s) {
        RngStream a(14, s);
        const auto t = simulate_path(model, Point{0.0}, a);
        if (t.status() != PathStatus::ReachedTop) continue;
        RngStream r(15, 1);
        const auto again = resume_path(model, t, t.size() - 1, r);
        CHECK(again == t);
        CHECK(r.counter() == 0);
        break;
    }
}

TEST_CASE("truncate_path makes a running prefix")
{
    const auto model = models::bm1d();
    RngStream a(16, 1);
    const auto t = simulate_path(model, Point{0.0}, a);
    const auto p = truncate_path(model, t, 5);
    CHECK(p.size() == 6);
    CHECK(p.status() == PathStatus::Running);
    CHECK(p == t.prefix(5));
}

// Euler-Maruyama overshoots the barrier, so hit fractions carry an O(sqrt(h))
// bias. Under that law the shift from h to 4h equals the bias at h, which
// serves as the allowance next to the oracle.
TEST_CASE("drifted BM hits the top with the scale-function probability")
{
    const double p = hit_fraction(models::bm1d(-1, 1, 1e-3), Point{0.0}, 100000, 17);
    const double coarse = hit_fraction(models::bm1d(-1, 1, 4e-3), Point{0.0}, 100000, 117);
    const double oracle = committor_1d_analytic(-1, 1, -1, 1, 0);
    CHECK(oracle == doctest::Approx(0.119203).epsilon(1e-5));
    CHECK(std::abs(p - oracle) < 0.004 + std::abs(coarse - p));
}

TEST_CASE("resume from level 0.5 matches the committor")
{
    const double q = (std::exp(1.0) - std::exp(-2.0)) / (std::exp(2.0) - std::exp(-2.0));
    CHECK(q == doctest::Approx(0.3562).epsilon(1e-3));
    const double p = hit_fraction(models::bm1d(-1, 1, 1e-3), Point{0.5}, 100000, 18);
    const double coarse = hit_fraction(models::bm1d(-1, 1, 4e-3), Point{0.5}, 100000, 118);
    CHECK(std::abs(p - q) < 0.01 + std::abs(coarse - p));
}

TEST_CASE("invalid models are rejected")
{
    auto model = models::bm1d();
    model.absorb_threshold = 0.5;
    CHECK_THROWS_AS(model.validate(), std::invalid_argument);
    model = models::bm1d();
    model.step = 0.0;
    CHECK_THROWS_AS(model.validate(), std::invalid_argument);
}

TEST_CASE("status names")
{
    CHECK(std::string(to_string(PathStatus::ReachedTop)) == "reached_top");
    CHECK(std::string(to_string(PathStatus::Censored)) == "censored");
}
