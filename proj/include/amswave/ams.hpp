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
#include <functional>
#include <optional>
#include <vector>

#include "amswave/levelset.hpp"
#include "amswave/process.hpp"

namespace amswave {

/// Path functional for observables of whole stopped trajectories.
using PathFunction = std::function<double(const Trajectory&)>;

/**
 * Stream layout shared by the AMS engine and the Fleming-Viot driver.
 *
 * Particle lifetime k has its own stream: lifetimes 0..N-1 are the initial
 * particles (initial draw, then path noise), lifetime N + j - 1 is the
 * continuation simulated at branching j. All parent choices come from one
 * selection stream, one uniform per branching, in branching order.
 */
struct ParticleStreams {
    std::uint64_t seed = 0;
    std::uint64_t replicate = 0;

    RngStream lifetime(std::uint64_t k) const { return make_stream(seed, replicate, Purpose::Lifetime, k); }
    RngStream selection() const { return make_stream(seed, replicate, Purpose::Selection, 0); }
};

/// Index of the chosen parent among `eligible` (sorted), from one uniform.
std::size_t pick_uniform(double u, std::size_t count);

struct Particle {
    Trajectory traj;
    double score = 0.0;
    std::size_t id = 0;  // 0-based
};

struct BranchingEvent {
    std::size_t j = 0;         // 1-based iteration
    double tau = 0.0;          // killed particle's score
    std::size_t killed = 0;    // 0-based
    std::size_t parent = 0;    // 0-based
    std::size_t sigma_index = 0;  // first index of the parent strictly above tau

    friend bool operator==(const BranchingEvent&, const BranchingEvent&) = default;
};

struct LevelSnapshot {
    double t = 0.0;
    std::size_t J_t = 0;
    std::vector<Point> entrance_states;
    std::vector<std::size_t> entrance_indices;
    double p_t_N = 1.0;
};

struct AmsDiagnostics {
    std::size_t steps = 0;                 // branchings performed
    std::size_t ties = 0;                  // steps whose minimal score was shared
    std::size_t tau_decreases = 0;         // tau_j < tau_{j-1}
    std::size_t tau_repeats = 0;           // tau_j == tau_{j-1}
    std::size_t entrance_violations = 0;   // snapshot entrance level < t
    std::size_t censored = 0;              // censored paths (only with TreatAsAbsorbed)
    std::size_t simulated_steps = 0;       // Euler steps taken

    double tie_rate() const { return steps ? static_cast<double>(ties) / static_cast<double>(steps) : 0.0; }
};

struct AmsOptions {
    /// 0 selects the default 100 N |ln 1e-6|.
    std::size_t max_branchings = 0;
    CensorPolicy censor_policy = CensorPolicy::Abort;
    bool keep_final_paths = false;
};

struct AmsRun {
    std::size_t N = 0;
    std::vector<BranchingEvent> events;
    std::vector<LevelSnapshot> snapshots;
    std::vector<double> final_scores;
    std::vector<Trajectory> final_paths;  // only with keep_final_paths
    AmsDiagnostics diagnostics;

    std::size_t J1() const { return events.size(); }
    /// (1 - 1/N)^J1
    double p_N() const;
};

/// Raised when the branching budget is exhausted (Assumption-3 style failure).
class ExplosionError : public ModelError {
    using ModelError::ModelError;
};

std::size_t default_max_branchings(std::size_t N);

/// (1 - 1/N)^J, evaluated as a product so AMS and Fleming-Viot agree bit for bit.
double survival_estimate(std::size_t N, std::size_t J);

/// N i.i.d. particles: lifetime k draws x0 from the initial law, then its path.
std::vector<Particle> initialize_particles(const DiffusionModel& model, std::size_t N,
                                           const ParticleStreams& streams,
                                           CensorPolicy policy = CensorPolicy::Abort,
                                           AmsDiagnostics* diag = nullptr);

/**
 * One AMS iteration. Returns nullopt when every score is 1.
 *
 * Kills the lowest score (smallest index on ties), draws the parent uniformly
 * among the particles whose score strictly exceeds tau with one uniform from
 * `selection`, clones the parent up to its first state above tau and
 * continues from there with `continuation`.
 */
std::optional<BranchingEvent> ams_step(const DiffusionModel& model, std::vector<Particle>& particles,
                                       RngStream& selection, RngStream continuation, std::size_t j,
                                       CensorPolicy policy = CensorPolicy::Abort,
                                       AmsDiagnostics* diag = nullptr);

/**
 * Last-particle adaptive multilevel splitting.
 *
 * A grid level t is recorded from the particle system at the first iteration
 * whose minimal score exceeds t; levels at or below the initial level 0 are
 * recorded from the initial states.
 */
AmsRun run_ams(const DiffusionModel& model, std::size_t N, const std::vector<double>& level_grid,
               const ParticleStreams& streams, const AmsOptions& opts = {});

struct SnapshotEstimate {
    double p = 0.0;
    double eta = 0.0;
    double gamma = 0.0;
};

/// p_t^N, eta_t^N(phi), gamma_t^N(phi) = p eta.
SnapshotEstimate estimate(const LevelSnapshot& snapshot, const StateFunction& phi);

struct PathEstimate {
    double gamma = 0.0;
    double eta = 0.0;
};

/// Averages psi over the N final stopped paths. Needs keep_final_paths.
PathEstimate path_observable_estimate(const AmsRun& run, const PathFunction& psi);

} // namespace amswave
