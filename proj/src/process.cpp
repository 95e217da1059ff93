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

#include "amswave/process.hpp"

#include <cmath>
#include <sstream>

namespace amswave {

void DiffusionModel::validate() const
{
    if (dim == 0 || noise_dim == 0) {
        throw std::invalid_argument("model '" + name + "': dimensions must be positive");
    }
    if (!drift || !diffusion || !level.eval || !init_sampler) {
        throw std::invalid_argument("model '" + name + "': drift, diffusion, level and init_sampler are required");
    }
    if (!(absorb_threshold < 0.0 && 0.0 < top_level)) {
        throw std::invalid_argument("model '" + name + "': need absorb_threshold < 0 < top_level");
    }
    if (!(step > 0.0) || !std::isfinite(step)) {
        throw std::invalid_argument("model '" + name + "': step must be positive");
    }
    if (max_steps == 0) {
        throw std::invalid_argument("model '" + name + "': max_steps must be positive");
    }
}

Point DiffusionModel::sample_initial(RngStream& rng) const
{
    Point x = init_sampler(rng);
    if (x.size() != dim) {
        throw ModelError("model '" + name + "': initial state has wrong dimension");
    }
    const double lvl = level(x);
    if (!(std::abs(lvl) <= level_tol)) {
        std::ostringstream msg;
        msg << "model '" << name << "': initial state off the zero level set (level " << lvl << ")";
        throw ModelError(msg.str());
    }
    return x;
}

const char* to_string(PathStatus status)
{
    switch (status) {
    case PathStatus::Running: return "running";
    case PathStatus::ReachedTop: return "reached_top";
    case PathStatus::Absorbed: return "absorbed";
    case PathStatus::Censored: return "censored";
    }
    return "unknown";
}

void Trajectory::push(std::span<const double> y, double lvl)
{
    states_.insert(states_.end(), y.begin(), y.end());
    levels_.push_back(lvl);
    if (lvl > max_level_) max_level_ = lvl;
}

Trajectory Trajectory::prefix(std::size_t k) const
{
    Trajectory out(dim_);
    out.states_.reserve((k + 1) * dim_);
    out.levels_.reserve(k + 1);
    for (std::size_t i = 0; i <= k; ++i) out.push(state(i), levels_[i]);
    return out;
}

namespace {

PathStatus classify(const DiffusionModel& model, double lvl)
{
    if (lvl > model.top_level) return PathStatus::ReachedTop;
    if (lvl <= model.absorb_threshold) return PathStatus::Absorbed;
    return PathStatus::Running;
}

} // namespace

Trajectory start_path(const DiffusionModel& model, std::span<const double> x0)
{
    if (x0.size() != model.dim) throw std::invalid_argument("start_path: dimension mismatch");
    Trajectory path(model.dim);
    const double lvl = model.level(x0);
    path.push(x0, lvl);
    path.set_status(classify(model, lvl));
    return path;
}

void extend_path(const DiffusionModel& model, Trajectory& path, double target_level, RngStream& rng)
{
    if (path.stopped() || path.max_level() > target_level) return;

    const std::size_t d = model.dim;
    const std::size_t n = model.noise_dim;
    const double h = model.step;
    const double sqrt_h = std::sqrt(h);
    std::vector<double> y(path.back().begin(), path.back().end());
    std::vector<double> b(d), sigma(d * n), dw(n), next(d);

    while (path.max_level() <= target_level) {
        if (path.steps() >= model.max_steps) {
            path.set_status(PathStatus::Censored);
            return;
        }
        model.drift(y, b);
        model.diffusion(y, sigma);
        for (std::size_t j = 0; j < n; ++j) dw[j] = sqrt_h * rng.normal();
        for (std::size_t i = 0; i < d; ++i) {
            double acc = y[i] + b[i] * h;
            for (std::size_t j = 0; j < n; ++j) acc += sigma[i * n + j] * dw[j];
            next[i] = acc;
        }
        y.swap(next);
        const double lvl = model.level(y);
        if (!std::isfinite(lvl)) throw ModelError("model '" + model.name + "': non-finite level along path");
        path.push(y, lvl);
        const PathStatus st = classify(model, lvl);
        if (st != PathStatus::Running) {
            path.set_status(st);
            return;
        }
    }
}

Trajectory simulate_path(const DiffusionModel& model, std::span<const double> x0, RngStream& rng)
{
    Trajectory path = start_path(model, x0);
    if (path.status() == PathStatus::Absorbed) {
        throw std::invalid_argument("simulate_path: initial state already absorbed");
    }
    extend_path(model, path, std::numeric_limits<double>::infinity(), rng);
    return path;
}

Trajectory truncate_path(const DiffusionModel& model, const Trajectory& path, std::size_t k)
{
    if (k >= path.size()) throw std::out_of_range("truncate_path: index past end of path");
    Trajectory out = path.prefix(k);
    out.set_status(classify(model, out.level(k)));
    return out;
}

Trajectory resume_path(const DiffusionModel& model, const Trajectory& path, std::size_t k,
                       RngStream& rng)
{
    Trajectory out = truncate_path(model, path, k);
    extend_path(model, out, std::numeric_limits<double>::infinity(), rng);
    return out;
}

std::optional<std::size_t> first_crossing_index(const Trajectory& path, double t)
{
    if (!(path.max_level() > t)) return std::nullopt;
    const auto& lv = path.levels();
    for (std::size_t k = 0; k < lv.size(); ++k) {
        if (lv[k] > t) return k;
    }
    return std::nullopt;
}

std::optional<std::size_t> entrance_index(const Trajectory& path, double t)
{
    if (!path.empty() && t <= path.level(0)) return 0;
    return first_crossing_index(path, t);
}

} // namespace amswave
