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

#include <algorithm>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "amswave/rng.hpp"

namespace amswave {

using Point = std::vector<double>;

/// Level function (reaction coordinate) with an optional analytic gradient.
struct LevelFunction {
    std::function<double(std::span<const double>)> eval;
    std::function<void(std::span<const double>, std::span<double>)> gradient;

    double operator()(std::span<const double> y) const { return eval(y); }
    bool has_gradient() const { return static_cast<bool>(gradient); }
};

/**
 * Stopped diffusion dY = b(Y) ds + sigma(Y) dW in R^dim driven by a
 * noise_dim-dimensional Brownian motion.
 *
 * The process is stopped on the first grid state with level > top_level or
 * level <= absorb_threshold. The initial law must live on {level = 0}.
 */
struct DiffusionModel {
    std::string name;
    std::size_t dim = 1;
    std::size_t noise_dim = 1;
    std::function<void(std::span<const double>, std::span<double>)> drift;
    /// Row-major dim x noise_dim matrix.
    std::function<void(std::span<const double>, std::span<double>)> diffusion;
    LevelFunction level;
    double absorb_threshold = -1.0;
    double top_level = 1.0;
    std::function<Point(RngStream&)> init_sampler;
    double step = 1e-3;
    std::size_t max_steps = 1'000'000;
    double level_tol = 1e-9;

    /// Throws std::invalid_argument when the model is unusable.
    void validate() const;
    /// Draws an initial state and checks it lies on the zero level set.
    Point sample_initial(RngStream& rng) const;
};

class ModelError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised when a path exhausts its step budget and the caller treats that as fatal.
class CensoredError : public ModelError {
    using ModelError::ModelError;
};

enum class PathStatus { Running, ReachedTop, Absorbed, Censored };

const char* to_string(PathStatus status);

/// Whether a censored path is fatal or silently counted as absorbed.
enum class CensorPolicy { Abort, TreatAsAbsorbed };

/**
 * A discretised stopped path at times 0, h, 2h, ... together with its cached
 * levels and running maximum.
 *
 * `Running` only appears on paths that are extended lazily; every public
 * simulation entry point returns a stopped path.
 */
class Trajectory {
  public:
    Trajectory() = default;
    explicit Trajectory(std::size_t dim) : dim_(dim) {}

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return levels_.size(); }
    std::size_t steps() const { return levels_.empty() ? 0 : levels_.size() - 1; }
    bool empty() const { return levels_.empty(); }

    std::span<const double> state(std::size_t k) const
    {
        return {states_.data() + k * dim_, dim_};
    }
    Point state_point(std::size_t k) const
    {
        auto s = state(k);
        return {s.begin(), s.end()};
    }
    std::span<const double> back() const { return state(size() - 1); }
    double level(std::size_t k) const { return levels_[k]; }
    const std::vector<double>& levels() const { return levels_; }
    const std::vector<double>& flat_states() const { return states_; }

    PathStatus status() const { return status_; }
    bool stopped() const { return status_ != PathStatus::Running; }
    /// Running maximum of the stored levels (uncapped).
    double max_level() const { return max_level_; }
    /// min(1, running max); exactly 1 once the top level has been crossed.
    double score() const { return status_ == PathStatus::ReachedTop ? 1.0 : std::min(1.0, max_level_); }

    /// Appends a state with its level; keeps the running maximum current.
    void push(std::span<const double> y, double lvl);
    void set_status(PathStatus s) { status_ = s; }

    /// Copy of states [0..k] with the running maximum rebuilt incrementally.
    Trajectory prefix(std::size_t k) const;

    friend bool operator==(const Trajectory&, const Trajectory&) = default;

  private:
    std::size_t dim_ = 0;
    std::vector<double> states_;
    std::vector<double> levels_;
    double max_level_ = -std::numeric_limits<double>::infinity();
    PathStatus status_ = PathStatus::Running;
};

/// Length-1 path at x0, with status resolved against the stopping sets.
Trajectory start_path(const DiffusionModel& model, std::span<const double> x0);

/**
 * Continues a running path by Euler-Maruyama until its running maximum
 * strictly exceeds `target_level`, or it stops (top, absorbed, censored).
 *
 * Each step consumes noise_dim Gaussian draws from `rng`, in coordinate order.
 * Extending in several calls yields the same states as a single call.
 */
void extend_path(const DiffusionModel& model, Trajectory& path, double target_level, RngStream& rng);

/// Full stopped path from x0. Pre: x0 not already absorbed.
Trajectory simulate_path(const DiffusionModel& model, std::span<const double> x0, RngStream& rng);

/**
 * States [0..k] of `path` followed by a fresh simulation from state k.
 * Returned unchanged (truncated) when state k is already past the top level.
 */
Trajectory resume_path(const DiffusionModel& model, const Trajectory& path, std::size_t k,
                       RngStream& rng);

/// States [0..k] as a running path (stopped if state k is past the top or absorbed).
Trajectory truncate_path(const DiffusionModel& model, const Trajectory& path, std::size_t k);

/// Smallest k with level(k) > t, if any.
std::optional<std::size_t> first_crossing_index(const Trajectory& path, double t);

inline double score(const Trajectory& path) { return path.score(); }

/// Entrance state of level t; by convention the initial state for t <= level(0).
std::optional<std::size_t> entrance_index(const Trajectory& path, double t);

} // namespace amswave
