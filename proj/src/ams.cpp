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

#include "amswave/ams.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace amswave {

std::size_t pick_uniform(double u, std::size_t count)
{
    const auto k = static_cast<std::size_t>(u * static_cast<double>(count));
    return std::min(k, count - 1);
}

std::size_t default_max_branchings(std::size_t N)
{
    return static_cast<std::size_t>(std::ceil(100.0 * static_cast<double>(N) * std::abs(std::log(1e-6))));
}

double survival_estimate(std::size_t N, std::size_t J)
{
    return std::pow(1.0 - 1.0 / static_cast<double>(N), static_cast<double>(J));
}

double AmsRun::p_N() const { return survival_estimate(N, events.size()); }

namespace {

void apply_censor_policy(const Trajectory& path, CensorPolicy policy, AmsDiagnostics* diag)
{
    if (path.status() != PathStatus::Censored) return;
    if (policy == CensorPolicy::Abort) {
        throw CensoredError("path censored after max_steps; raise max_steps or check that the "
                            "process leaves the slab (S_1 or S_A must be finite)");
    }
    if (diag) ++diag->censored;
}

} // namespace

std::vector<Particle> initialize_particles(const DiffusionModel& model, std::size_t N,
                                           const ParticleStreams& streams, CensorPolicy policy,
                                           AmsDiagnostics* diag)
{
    if (N < 2) throw std::invalid_argument("AMS needs at least two particles");
    std::vector<Particle> particles;
    particles.reserve(N);
    for (std::size_t k = 0; k < N; ++k) {
        RngStream rng = streams.lifetime(k);
        const Point x0 = model.sample_initial(rng);
        Trajectory path = simulate_path(model, x0, rng);
        apply_censor_policy(path, policy, diag);
        if (diag) diag->simulated_steps += path.steps();
        const double s = path.score();
        particles.push_back({std::move(path), s, k});
    }
    return particles;
}

std::optional<BranchingEvent> ams_step(const DiffusionModel& model, std::vector<Particle>& particles,
                                       RngStream& selection, RngStream continuation, std::size_t j,
                                       CensorPolicy policy, AmsDiagnostics* diag)
{
    const std::size_t N = particles.size();
    std::size_t killed = 0;
    std::size_t at_min = 0;
    double tau = particles[0].score;
    for (std::size_t n = 0; n < N; ++n) {
        const double s = particles[n].score;
        if (s < tau) {
            tau = s;
            killed = n;
            at_min = 1;
        } else if (s == tau) {
            ++at_min;
        }
    }
    if (tau >= 1.0) return std::nullopt;
    if (diag && at_min > 1) ++diag->ties;

    std::vector<std::size_t> eligible;
    eligible.reserve(N - 1);
    for (std::size_t n = 0; n < N; ++n) {
        if (particles[n].score > tau) eligible.push_back(n);
    }
    if (eligible.empty()) {
        throw ModelError("AMS: every particle has the minimal score; no parent can be cloned");
    }
    const std::size_t parent = eligible[pick_uniform(selection.uniform(), eligible.size())];
    const Trajectory& ptraj = particles[parent].traj;
    const auto sigma = first_crossing_index(ptraj, tau);
    if (!sigma) throw std::logic_error("AMS: parent has no strict crossing of tau");

    Trajectory child = resume_path(model, ptraj, *sigma, continuation);
    apply_censor_policy(child, policy, diag);
    if (diag) {
        diag->simulated_steps += child.steps() - *sigma;
        ++diag->steps;
    }
    const double s = child.score();
    particles[killed] = Particle{std::move(child), s, killed};
    return BranchingEvent{j, tau, killed, parent, *sigma};
}

namespace {

LevelSnapshot take_snapshot(const std::vector<Particle>& particles, double t, std::size_t J,
                            AmsDiagnostics& diag)
{
    LevelSnapshot snap;
    snap.t = t;
    snap.J_t = J;
    snap.p_t_N = survival_estimate(particles.size(), J);
    snap.entrance_states.reserve(particles.size());
    snap.entrance_indices.reserve(particles.size());
    for (const Particle& p : particles) {
        const auto k = entrance_index(p.traj, t);
        if (!k) throw std::logic_error("AMS snapshot: particle without an entrance state");
        if (p.traj.level(*k) < t) ++diag.entrance_violations;
        snap.entrance_indices.push_back(*k);
        snap.entrance_states.push_back(p.traj.state_point(*k));
    }
    return snap;
}

} // namespace

AmsRun run_ams(const DiffusionModel& model, std::size_t N, const std::vector<double>& level_grid,
               const ParticleStreams& streams, const AmsOptions& opts)
{
    model.validate();
    if (N < 2) throw std::invalid_argument("AMS needs at least two particles");
    for (std::size_t i = 0; i < level_grid.size(); ++i) {
        if (level_grid[i] < 0.0 || level_grid[i] > 1.0 || (i && level_grid[i] <= level_grid[i - 1])) {
            throw std::invalid_argument("level grid must be strictly increasing within [0, 1]");
        }
    }
    const std::size_t budget = opts.max_branchings ? opts.max_branchings : default_max_branchings(N);

    AmsRun run;
    run.N = N;
    auto& diag = run.diagnostics;
    std::vector<Particle> particles = initialize_particles(model, N, streams, opts.censor_policy, &diag);

    std::size_t g = 0;
    while (g < level_grid.size() && level_grid[g] <= 0.0) {
        run.snapshots.push_back(take_snapshot(particles, level_grid[g], 0, diag));
        ++g;
    }

    RngStream selection = streams.selection();
    double previous_tau = -std::numeric_limits<double>::infinity();
    for (;;) {
        double min_score = 1.0;
        for (const Particle& p : particles) min_score = std::min(min_score, p.score);
        while (g < level_grid.size() && level_grid[g] < min_score) {
            run.snapshots.push_back(take_snapshot(particles, level_grid[g], run.events.size(), diag));
            ++g;
        }
        if (min_score >= 1.0) break;
        if (run.events.size() >= budget) {
            std::ostringstream msg;
            msg << "AMS exceeded " << budget << " branchings; the probability of reaching the top "
                << "level is not bounded away from zero (uniform success assumption violated?)";
            throw ExplosionError(msg.str());
        }
        const std::size_t j = run.events.size() + 1;
        auto ev = ams_step(model, particles, selection, streams.lifetime(N + j - 1), j,
                           opts.censor_policy, &diag);
        if (!ev) break;
        if (ev->tau < previous_tau) ++diag.tau_decreases;
        if (ev->tau == previous_tau) ++diag.tau_repeats;
        previous_tau = ev->tau;
        run.events.push_back(*ev);
    }
    for (; g < level_grid.size(); ++g) {
        run.snapshots.push_back(take_snapshot(particles, level_grid[g], run.events.size(), diag));
    }

    run.final_scores.reserve(N);
    for (auto& p : particles) {
        run.final_scores.push_back(p.score);
        if (opts.keep_final_paths) run.final_paths.push_back(std::move(p.traj));
    }
    return run;
}

SnapshotEstimate estimate(const LevelSnapshot& snapshot, const StateFunction& phi)
{
    if (snapshot.entrance_states.empty()) throw std::invalid_argument("estimate: empty snapshot");
    double sum = 0.0;
    for (const Point& x : snapshot.entrance_states) sum += phi(x);
    SnapshotEstimate e;
    e.p = snapshot.p_t_N;
    e.eta = sum / static_cast<double>(snapshot.entrance_states.size());
    e.gamma = e.p * e.eta;
    return e;
}

PathEstimate path_observable_estimate(const AmsRun& run, const PathFunction& psi)
{
    if (run.final_paths.size() != run.N || run.N == 0) {
        throw std::invalid_argument("path_observable_estimate: run was made without keep_final_paths");
    }
    double sum = 0.0;
    for (const Trajectory& path : run.final_paths) sum += psi(path);
    PathEstimate e;
    e.eta = sum / static_cast<double>(run.N);
    e.gamma = run.p_N() * e.eta;
    return e;
}

} // namespace amswave
