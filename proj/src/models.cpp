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

#include "amswave/models.hpp"

#include <cmath>

namespace amswave::models {

namespace {

LevelFunction first_coordinate(std::size_t dim)
{
    LevelFunction xi;
    xi.eval = [](std::span<const double> y) { return y[0]; };
    xi.gradient = [dim](std::span<const double>, std::span<double> g) {
        for (std::size_t i = 0; i < dim; ++i) g[i] = i == 0 ? 1.0 : 0.0;
    };
    return xi;
}

auto identity_diffusion(std::size_t dim)
{
    return [dim](std::span<const double>, std::span<double> s) {
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = 0; j < dim; ++j) s[i * dim + j] = i == j ? 1.0 : 0.0;
    };
}

} // namespace

DiffusionModel bm1d(double mu, double sigma, double step, std::size_t max_steps)
{
    DiffusionModel m;
    m.name = "bm1d";
    m.dim = 1;
    m.noise_dim = 1;
    m.drift = [mu](std::span<const double>, std::span<double> b) { b[0] = mu; };
    m.diffusion = [sigma](std::span<const double>, std::span<double> s) { s[0] = sigma; };
    m.level = first_coordinate(1);
    m.init_sampler = [](RngStream&) { return Point{0.0}; };
    m.step = step;
    m.max_steps = max_steps;
    return m;
}

DiffusionModel bm2d(double mu, double step, std::size_t max_steps)
{
    DiffusionModel m;
    m.name = "bm2d";
    m.dim = 2;
    m.noise_dim = 2;
    m.drift = [mu](std::span<const double>, std::span<double> b) {
        b[0] = mu;
        b[1] = 0.0;
    };
    m.diffusion = identity_diffusion(2);
    m.level = first_coordinate(2);
    m.init_sampler = [](RngStream&) { return Point{0.0, 0.0}; };
    m.step = step;
    m.max_steps = max_steps;
    return m;
}

DiffusionModel coupled2d(double coupling, double step, std::size_t max_steps)
{
    DiffusionModel m;
    m.name = "coupled2d";
    m.dim = 2;
    m.noise_dim = 2;
    m.drift = [coupling](std::span<const double> y, std::span<double> b) {
        b[0] = coupling * y[1] - y[0] * y[0] * y[0] + y[0];
        b[1] = -y[1];
    };
    m.diffusion = identity_diffusion(2);
    m.level = first_coordinate(2);
    m.init_sampler = [](RngStream& rng) { return Point{0.0, std::sqrt(0.5) * rng.normal()}; };
    m.step = step;
    m.max_steps = max_steps;
    return m;
}

DiffusionModel frozen(std::size_t max_steps)
{
    DiffusionModel m;
    m.name = "frozen";
    m.drift = [](std::span<const double>, std::span<double> b) { b[0] = 0.0; };
    m.diffusion = [](std::span<const double>, std::span<double> s) { s[0] = 0.0; };
    m.level = first_coordinate(1);
    m.init_sampler = [](RngStream&) { return Point{0.0}; };
    m.max_steps = max_steps;
    return m;
}

} // namespace amswave::models
