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

#include <concepts>
#include <limits>
#include <optional>
#include <queue>
#include <sstream>
#include <vector>

#include "amswave/ams.hpp"
#include "amswave/levelset.hpp"
#include "amswave/process.hpp"

namespace amswave {

// ---------------------------------------------------------------------------
// Level-indexed process
// ---------------------------------------------------------------------------

struct WaveJump {
    double grid_level = 0.0;   // grid level at which the move was observed
    double state_level = 0.0;  // level of the entrance state after the move
    double size = 0.0;         // Euclidean displacement over one grid increment
};

/**
 * The level-indexed process t -> Y_{S_t} of one trajectory, read on a grid.
 * states[k] is empty (cemetery) once the path has been absorbed below grid[k].
 */
struct LevelIndexedPath {
    std::vector<double> grid;
    std::vector<std::optional<Point>> states;
    std::optional<double> death_level;
    std::vector<WaveJump> jumps;
    std::size_t path_steps = 0;

    bool alive(std::size_t k) const { return states[k].has_value(); }
    /// Cemetery-to-alive transitions; always 0 for a well-formed wave.
    std::size_t resurrections() const;
};

/// 1e-3 times the diagonal of the box [lo, hi].
double default_jump_tol(const Point& lo, const Point& hi);

/// Wave of the path simulated from x0 (on the zero level set) with `rng`.
/// Throws CensoredError when the underlying path is censored.
LevelIndexedPath level_indexed_sample(const DiffusionModel& model, std::span<const double> x0,
                                      const std::vector<double>& level_grid, RngStream& rng,
                                      double jump_tol);

/**
 * Q^h phi(x) = E[phi(X_h) | X_0 = x] with phi = 0 on the cemetery, over m
 * samples on child streams of `rng`. h is clipped so that level(x) + h <= 1.
 */
CommittorEstimate semigroup_apply(const DiffusionModel& model, std::span<const double> x, double h,
                                  const StateFunction& phi, std::size_t m, const RngStream& rng,
                                  std::size_t workers = 1);

// ---------------------------------------------------------------------------
// Fleming-Viot driver
// ---------------------------------------------------------------------------

/// Outcome of moving a particle to a level: alive there, or dead at death_level.
struct Advance {
    bool alive = true;
    double death_level = std::numeric_limits<double>::infinity();
};

/**
 * A killed Markov process indexed by level, as seen by the Fleming-Viot
 * driver. `advance` moves a state forward to a level, reporting the level of
 * death if it gets killed on the way; `branch` returns the parent's state at
 * an earlier level with a fresh future drawn from `rng`.
 */
template <class S>
concept KilledProcessSampler =
    requires(const S& s, typename S::State& st, const typename S::State& cst, double level, RngStream rng) {
        { s.spawn(rng) } -> std::same_as<typename S::State>;
        { s.branch(cst, level, rng) } -> std::same_as<typename S::State>;
        { s.advance(st, level) } -> std::same_as<Advance>;
        { s.observe(cst) } -> std::convertible_to<Point>;
    };

struct FvBranching {
    std::size_t index = 0;  // 1-based branching count
    double level = 0.0;     // death level of the killed particle
    std::size_t killed = 0;
    std::size_t parent = 0;

    friend bool operator==(const FvBranching&, const FvBranching&) = default;
};

template <class State>
struct FvResult {
    std::size_t N = 0;
    std::vector<double> grid;
    std::vector<std::vector<Point>> populations;      // per grid level
    std::vector<std::size_t> branchings_through;      // branchings with death level <= grid[k]
    std::vector<double> p_N;                          // (1 - 1/N)^branchings_through[k]
    std::vector<FvBranching> log;
    std::vector<State> final_states;
    std::size_t resurrections = 0;

    double final_p() const { return p_N.empty() ? 1.0 : p_N.back(); }
};

struct FvOptions {
    std::size_t max_branchings = 0;  // 0: same default as AMS
};

/// eta^N(phi) over the population at grid index k.
template <class State>
double fv_eta(const FvResult<State>& result, std::size_t k, const StateFunction& phi)
{
    double sum = 0.0;
    for (const Point& x : result.populations[k]) sum += phi(x);
    return sum / static_cast<double>(result.populations[k].size());
}

/**
 * Fleming-Viot particle system of `sampler` observed on a level grid.
 *
 * Particles are moved grid level by grid level. Deaths inside an increment are
 * resolved in order of death level (smallest particle index first on ties):
 * the dead particle takes the state, at its death level, of a particle chosen
 * uniformly among those still alive there, then continues to the grid level
 * and may die again. The grid only decides where populations are recorded.
 * Stream use follows ParticleStreams.
 */
template <KilledProcessSampler S>
FvResult<typename S::State> run_fleming_viot(const S& sampler, std::size_t N, const std::vector<double>& level_grid,
                                             const ParticleStreams& streams, const FvOptions& opts = {})
{
    using State = typename S::State;
    if (N < 2) throw std::invalid_argument("Fleming-Viot needs at least two particles");
    if (level_grid.empty()) throw std::invalid_argument("Fleming-Viot needs a non-empty level grid");
    for (std::size_t i = 1; i < level_grid.size(); ++i) {
        if (!(level_grid[i] > level_grid[i - 1])) {
            throw std::invalid_argument("level grid must be strictly increasing");
        }
    }
    const std::size_t budget = opts.max_branchings ? opts.max_branchings : default_max_branchings(N);
    constexpr double alive = std::numeric_limits<double>::infinity();

    FvResult<State> out;
    out.N = N;
    out.grid = level_grid;
    std::vector<State> states;
    states.reserve(N);
    for (std::size_t k = 0; k < N; ++k) states.push_back(sampler.spawn(streams.lifetime(k)));

    RngStream selection = streams.selection();
    std::vector<double> death(N, alive);
    std::vector<std::size_t> eligible;
    eligible.reserve(N);
    using Pending = std::pair<double, std::size_t>;

    for (const double t : level_grid) {
        std::priority_queue<Pending, std::vector<Pending>, std::greater<>> pending;
        for (std::size_t i = 0; i < N; ++i) {
            const Advance a = sampler.advance(states[i], t);
            death[i] = a.alive ? alive : a.death_level;
            if (!a.alive) pending.emplace(a.death_level, i);
        }
        while (!pending.empty()) {
            const auto [s, i] = pending.top();
            pending.pop();
            eligible.clear();
            for (std::size_t n = 0; n < N; ++n) {
                if (n != i && death[n] > s) eligible.push_back(n);
            }
            if (eligible.empty()) {
                std::ostringstream msg;
                msg << "Fleming-Viot: all particles died at level " << s;
                throw ModelError(msg.str());
            }
            if (out.log.size() >= budget) {
                throw ExplosionError("Fleming-Viot exceeded its branching budget");
            }
            const std::size_t parent = eligible[pick_uniform(selection.uniform(), eligible.size())];
            states[i] = sampler.branch(states[parent], s, streams.lifetime(N + out.log.size()));
            out.log.push_back({out.log.size() + 1, s, i, parent});
            const Advance a = sampler.advance(states[i], t);
            if (a.alive) {
                death[i] = alive;
            } else {
                if (!(a.death_level > s)) ++out.resurrections;
                death[i] = a.death_level;
                pending.emplace(a.death_level, i);
            }
        }
        std::vector<Point> pop;
        pop.reserve(N);
        for (const State& st : states) pop.push_back(sampler.observe(st));
        out.populations.push_back(std::move(pop));
        out.branchings_through.push_back(out.log.size());
        out.p_N.push_back(survival_estimate(N, out.log.size()));
    }
    out.final_states = std::move(states);
    return out;
}

// ---------------------------------------------------------------------------
// Samplers
// ---------------------------------------------------------------------------

/// Path prefix of an AMS particle, extended lazily with its lifetime stream.
struct AmsPathState {
    Trajectory traj;
    RngStream rng;
    std::size_t position = 0;  // entrance index of the last level reached
};

/**
 * The level-indexed process of a diffusion as a killed process: a state is a
 * path prefix whose maximum is its endpoint; advancing extends the path until
 * it strictly crosses the level, and death happens at the path's score.
 * Consumes streams exactly like run_ams, so both produce the same system.
 */
class AmsSampler {
  public:
    using State = AmsPathState;

    explicit AmsSampler(const DiffusionModel& model, CensorPolicy policy = CensorPolicy::Abort)
        : model_(&model), policy_(policy)
    {}

    State spawn(RngStream rng) const;
    State branch(const State& parent, double level, RngStream rng) const;
    Advance advance(State& st, double level) const;
    Point observe(const State& st) const { return st.traj.state_point(st.position); }

  private:
    const DiffusionModel* model_;
    CensorPolicy policy_;
};

struct KillingState {
    RngStream rng;
    double level = 0.0;
    double death_at = 0.0;
};

/// Synthetic process on the level axis killed at a constant rate per unit level.
class IndependentKillingSampler {
  public:
    using State = KillingState;

    explicit IndependentKillingSampler(double rate) : rate_(rate) {}
    /// Rate giving death probability q over an increment of length delta.
    static IndependentKillingSampler from_increment_probability(double q, double delta);

    double rate() const { return rate_; }
    State spawn(RngStream rng) const;
    State branch(const State& parent, double level, RngStream rng) const;
    Advance advance(State& st, double level) const;
    Point observe(const State& st) const { return {st.level}; }

  private:
    double lifetime(RngStream& rng) const;
    double rate_;
};

static_assert(KilledProcessSampler<AmsSampler>);
static_assert(KilledProcessSampler<IndependentKillingSampler>);

/// Realised branching levels of an AMS run with 0 and 1 added: the grid on
/// which Fleming-Viot reproduces every AMS branching at a grid point.
std::vector<double> event_grid(const AmsRun& run);

} // namespace amswave
