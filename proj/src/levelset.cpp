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

#include "amswave/levelset.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "amswave/parallel.hpp"

namespace amswave {

namespace {

std::string describe(std::span<const double> y)
{
    std::ostringstream out;
    out.precision(17);
    out << '(';
    for (std::size_t i = 0; i < y.size(); ++i) out << (i ? ", " : "") << y[i];
    out << ')';
    return out.str();
}

void require_finite(double v, const char* what, std::span<const double> y)
{
    if (!std::isfinite(v)) {
        throw ModelError(std::string("non-finite ") + what + " at probe " + describe(y));
    }
}

Point fd_gradient(const LevelFunction& xi, std::span<const double> y)
{
    Point g(y.size());
    Point z(y.begin(), y.end());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = fd_step(y[i]);
        z[i] = y[i] + e;
        const double up = xi(z);
        z[i] = y[i] - e;
        const double dn = xi(z);
        z[i] = y[i];
        g[i] = (up - dn) / (2.0 * e);
    }
    return g;
}

} // namespace

double fd_step(double yi) { return 1e-5 * (1.0 + std::abs(yi)); }

Point level_gradient(const LevelFunction& xi, std::span<const double> y)
{
    if (!xi.has_gradient()) return fd_gradient(xi, y);
    Point g(y.size());
    xi.gradient(y, g);
    return g;
}

double level_hessian_max(const LevelFunction& xi, std::span<const double> y)
{
    // Second differences need a larger step than gradients to stay above roundoff.
    const std::size_t d = y.size();
    Point z(y.begin(), y.end());
    double worst = 0.0;
    auto at = [&](std::size_t i, double di, std::size_t j, double dj) {
        z[i] += di;
        z[j] += dj;
        const double v = xi(z);
        z[i] = y[i];
        z[j] = y[j];
        return v;
    };
    const double f0 = xi(y);
    for (std::size_t i = 0; i < d; ++i) {
        const double ei = 1e-3 * (1.0 + std::abs(y[i]));
        for (std::size_t j = i; j < d; ++j) {
            double hij;
            if (i == j) {
                z[i] = y[i] + ei;
                const double up = xi(z);
                z[i] = y[i] - ei;
                const double dn = xi(z);
                z[i] = y[i];
                hij = (up - 2.0 * f0 + dn) / (ei * ei);
            } else {
                const double ej = 1e-3 * (1.0 + std::abs(y[j]));
                hij = (at(i, ei, j, ej) - at(i, ei, j, -ej) - at(i, -ei, j, ej) + at(i, -ei, j, -ej)) /
                      (4.0 * ei * ej);
            }
            worst = std::max(worst, std::abs(hij));
        }
    }
    return worst;
}

EllipticityReport check_ellipticity(const DiffusionModel& model, std::span<const Point> probes,
                                    double delta_min)
{
    EllipticityReport rep;
    rep.delta_min = delta_min;
    rep.min_quadratic = std::numeric_limits<double>::infinity();
    const std::size_t d = model.dim;
    const std::size_t n = model.noise_dim;
    std::vector<double> b(d), sigma(d * n);

    for (const Point& y : probes) {
        if (y.size() != d) throw std::invalid_argument("check_ellipticity: probe dimension mismatch");
        const double lvl = model.level(y);
        require_finite(lvl, "level", y);
        if (lvl < model.absorb_threshold - model.level_tol || lvl > model.top_level + model.level_tol) {
            throw std::invalid_argument("check_ellipticity: probe " + describe(y) + " outside the slab");
        }
        model.drift(y, b);
        model.diffusion(y, sigma);
        double bn = 0.0, sn = 0.0;
        for (double v : b) {
            require_finite(v, "drift", y);
            bn += v * v;
        }
        for (double v : sigma) {
            require_finite(v, "diffusion", y);
            sn += v * v;
        }
        const Point g = level_gradient(model.level, y);
        for (double v : g) require_finite(v, "level gradient", y);
        if (model.level.has_gradient()) {
            const Point fd = fd_gradient(model.level, y);
            for (std::size_t i = 0; i < d; ++i) {
                rep.max_gradient_mismatch = std::max(rep.max_gradient_mismatch, std::abs(fd[i] - g[i]));
            }
        }
        const double hess = level_hessian_max(model.level, y);
        require_finite(hess, "level Hessian", y);

        // grad^T sigma sigma^T grad = |sigma^T grad|^2
        double quad = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double c = 0.0;
            for (std::size_t i = 0; i < d; ++i) c += sigma[i * n + j] * g[i];
            quad += c * c;
        }
        if (quad < rep.min_quadratic) {
            rep.min_quadratic = quad;
            rep.argmin = y;
        }
        rep.max_drift_norm = std::max(rep.max_drift_norm, std::sqrt(bn));
        rep.max_diffusion_norm = std::max(rep.max_diffusion_norm, std::sqrt(sn));
        rep.max_level_hessian = std::max(rep.max_level_hessian, hess);
        ++rep.probes;
    }
    rep.passed = rep.probes > 0 && rep.min_quadratic >= delta_min;
    return rep;
}

std::vector<Point> slab_probe_grid(const DiffusionModel& model, const Point& lo, const Point& hi,
                                   std::size_t per_axis)
{
    const std::size_t d = model.dim;
    if (lo.size() != d || hi.size() != d || per_axis < 2) {
        throw std::invalid_argument("slab_probe_grid: bad box or resolution");
    }
    std::vector<Point> out;
    std::vector<std::size_t> idx(d, 0);
    Point y(d);
    for (;;) {
        for (std::size_t i = 0; i < d; ++i) {
            y[i] = lo[i] + (hi[i] - lo[i]) * static_cast<double>(idx[i]) / static_cast<double>(per_axis - 1);
        }
        const double lvl = model.level(y);
        if (lvl >= model.absorb_threshold && lvl <= model.top_level) out.push_back(y);
        std::size_t i = 0;
        while (i < d && ++idx[i] == per_axis) idx[i++] = 0;
        if (i == d) break;
    }
    return out;
}

double committor_1d_analytic(double mu, double sigma, double lo, double hi, double x)
{
    if (!(sigma > 0.0)) throw std::invalid_argument("committor_1d_analytic: sigma must be positive");
    if (!(lo < hi)) throw std::invalid_argument("committor_1d_analytic: need lo < hi");
    if (x <= lo) return 0.0;
    if (x >= hi) return 1.0;
    // s(u) = exp(k u) with k = -2 mu / sigma^2, normalised at lo.
    const double k = -2.0 * mu / (sigma * sigma);
    if (k == 0.0) return (x - lo) / (hi - lo);
    return std::expm1(k * (x - lo)) / std::expm1(k * (hi - lo));
}

CommittorSamples sample_q(const DiffusionModel& model, std::span<const double> y,
                          const StateFunction& phi, std::size_t m, const RngStream& rng,
                          std::size_t workers)
{
    if (m == 0) throw std::invalid_argument("estimate_q: need at least one sample");
    CommittorSamples out;
    out.values.assign(m, 0.0);
    const double lvl = model.level(y);
    if (lvl < -model.level_tol) throw std::invalid_argument("estimate_q: start below the zero level");
    if (lvl >= model.top_level) {
        // Already on the top level set: S1 = 0.
        out.values.assign(m, phi(y));
        return out;
    }
    std::vector<unsigned char> censored(m, 0);
    parallel_for(m, workers, [&](std::size_t i) {
        RngStream sub = rng.split(i);
        const Trajectory path = simulate_path(model, y, sub);
        if (path.status() == PathStatus::ReachedTop) {
            out.values[i] = phi(path.back());
        } else if (path.status() == PathStatus::Censored) {
            censored[i] = 1;
        }
    });
    for (auto c : censored) out.censored += c;
    if (static_cast<double>(out.censored) > 0.01 * static_cast<double>(m)) {
        std::ostringstream msg;
        msg << "estimate_q: " << out.censored << " of " << m << " samples censored (limit 1%)";
        throw CensoredError(msg.str());
    }
    return out;
}

CommittorEstimate estimate_q(const DiffusionModel& model, std::span<const double> y,
                             const StateFunction& phi, std::size_t m, const RngStream& rng,
                             std::size_t workers)
{
    const CommittorSamples s = sample_q(model, y, phi, m, rng, workers);
    double sum = 0.0;
    for (double v : s.values) sum += v;
    const auto [lo, hi] = std::minmax_element(s.values.begin(), s.values.end());
    // A constant sample is reported exactly; the running sum would round.
    const double mean = *lo == *hi ? *lo : sum / static_cast<double>(m);
    double ss = 0.0;
    for (double v : s.values) ss += (v - mean) * (v - mean);
    CommittorEstimate est;
    est.value = mean;
    est.std_error = m > 1 ? std::sqrt(ss / static_cast<double>(m - 1) / static_cast<double>(m)) : 0.0;
    est.n_samples = m;
    est.censored = s.censored;
    return est;
}

} // namespace amswave
