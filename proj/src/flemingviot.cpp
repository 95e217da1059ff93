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

#include "amswave/flemingviot.hpp"

#include <algorithm>
#include <cmath>

#include "amswave/parallel.hpp"

namespace amswave {

std::size_t LevelIndexedPath::resurrections() const
{
    std::size_t count = 0;
    for (std::size_t k = 1; k < states.size(); ++k) {
        if (!states[k - 1] && states[k]) ++count;
    }
    return count;
}

double default_jump_tol(const Point& lo, const Point& hi)
{
    double d2 = 0.0;
    for (std::size_t i = 0; i < lo.size(); ++i) d2 += (hi[i] - lo[i]) * (hi[i] - lo[i]);
    return 1e-3 * std::sqrt(d2);
}

LevelIndexedPath level_indexed_sample(const DiffusionModel& model, std::span<const double> x0,
                                      const std::vector<double>& level_grid, RngStream& rng,
                                      double jump_tol)
{
    const double x0_level = model.level(x0);
    if (std::abs(x0_level) > model.level_tol) {
        throw std::invalid_argument("level_indexed_sample: start must lie on the zero level set");
    }
    const Trajectory path = simulate_path(model, x0, rng);
    if (path.status() == PathStatus::Censored) {
        throw CensoredError("level_indexed_sample: underlying path censored");
    }
    LevelIndexedPath wave;
    wave.grid = level_grid;
    wave.path_steps = path.steps();
    wave.states.reserve(level_grid.size());
    constexpr std::size_t none = static_cast<std::size_t>(-1);
    std::size_t previous = none;
    for (const double t : level_grid) {
        const auto k = entrance_index(path, t);
        if (!k) {
            if (!wave.death_level) wave.death_level = path.score();
            wave.states.emplace_back(std::nullopt);
            previous = none;
            continue;
        }
        wave.states.emplace_back(path.state_point(*k));
        if (previous != none && previous != *k) {
            const auto a = path.state(previous);
            const auto b = path.state(*k);
            double d2 = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) d2 += (b[i] - a[i]) * (b[i] - a[i]);
            const double size = std::sqrt(d2);
            if (size > jump_tol) wave.jumps.push_back({t, path.level(*k), size});
        }
        previous = *k;
    }
    return wave;
}

CommittorEstimate semigroup_apply(const DiffusionModel& model, std::span<const double> x, double h,
                                  const StateFunction& phi, std::size_t m, const RngStream& rng,
                                  std::size_t workers)
{
    if (m == 0) throw std::invalid_argument("semigroup_apply: need at least one sample");
    if (h < 0.0) throw std::invalid_argument("semigroup_apply: negative level increment");
    const double start = model.level(x);
    const double target = std::min(start + h, model.top_level);
    CommittorEstimate est;
    est.n_samples = m;
    if (target <= start) {
        est.value = phi(x);
        return est;
    }
    std::vector<double> values(m, 0.0);
    std::vector<unsigned char> censored(m, 0);
    parallel_for(m, workers, [&](std::size_t i) {
        RngStream sub = rng.split(i);
        Trajectory path = start_path(model, x);
        for (;;) {
            if (const auto k = entrance_index(path, target)) {
                values[i] = phi(path.state(*k));
                return;
            }
            if (path.stopped()) break;
            extend_path(model, path, target, sub);
        }
        if (path.status() == PathStatus::Censored) censored[i] = 1;
    });
    for (auto c : censored) est.censored += c;
    if (static_cast<double>(est.censored) > 0.01 * static_cast<double>(m)) {
        throw CensoredError("semigroup_apply: more than 1% of samples censored");
    }
    double sum = 0.0;
    for (double v : values) sum += v;
    est.value = sum / static_cast<double>(m);
    double ss = 0.0;
    for (double v : values) ss += (v - est.value) * (v - est.value);
    est.std_error = m > 1 ? std::sqrt(ss / static_cast<double>(m - 1) / static_cast<double>(m)) : 0.0;
    return est;
}

AmsSampler::State AmsSampler::spawn(RngStream rng) const
{
    const Point x0 = model_->sample_initial(rng);
    State st{start_path(*model_, x0), rng, 0};
    if (st.traj.status() == PathStatus::Absorbed) {
        throw std::invalid_argument("AmsSampler: initial state already absorbed");
    }
    return st;
}

AmsSampler::State AmsSampler::branch(const State& parent, double level, RngStream rng) const
{
    const auto k = first_crossing_index(parent.traj, level);
    if (!k) throw std::logic_error("AmsSampler: parent has no strict crossing of the branching level");
    return State{truncate_path(*model_, parent.traj, *k), rng, *k};
}

Advance AmsSampler::advance(State& st, double level) const
{
    for (;;) {
        if (const auto k = entrance_index(st.traj, level)) {
            st.position = *k;
            return {true, std::numeric_limits<double>::infinity()};
        }
        if (st.traj.stopped()) {
            if (st.traj.status() == PathStatus::Censored && policy_ == CensorPolicy::Abort) {
                throw CensoredError("AmsSampler: path censored after max_steps");
            }
            return {false, st.traj.score()};
        }
        extend_path(*model_, st.traj, level, st.rng);
    }
}

IndependentKillingSampler IndependentKillingSampler::from_increment_probability(double q, double delta)
{
    if (!(q >= 0.0 && q < 1.0) || !(delta > 0.0)) {
        throw std::invalid_argument("IndependentKillingSampler: need 0 <= q < 1 and delta > 0");
    }
    return IndependentKillingSampler(-std::log1p(-q) / delta);
}

double IndependentKillingSampler::lifetime(RngStream& rng) const
{
    if (rate_ <= 0.0) return std::numeric_limits<double>::infinity();
    return rng.exponential(rate_);
}

IndependentKillingSampler::State IndependentKillingSampler::spawn(RngStream rng) const
{
    State st{rng, 0.0, 0.0};
    st.death_at = lifetime(st.rng);
    return st;
}

IndependentKillingSampler::State IndependentKillingSampler::branch(const State&, double level,
                                                                   RngStream rng) const
{
    State st{rng, level, 0.0};
    st.death_at = level + lifetime(st.rng);
    return st;
}

Advance IndependentKillingSampler::advance(State& st, double level) const
{
    if (st.death_at <= level) return {false, st.death_at};
    st.level = level;
    return {true, std::numeric_limits<double>::infinity()};
}

std::vector<double> event_grid(const AmsRun& run)
{
    std::vector<double> grid{0.0};
    for (const BranchingEvent& ev : run.events) {
        if (ev.tau > grid.back()) grid.push_back(ev.tau);
    }
    if (grid.back() < 1.0) grid.push_back(1.0);
    return grid;
}

} // namespace amswave
